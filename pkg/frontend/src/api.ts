/**
 * Thin typed client for the risk service. The only backend the UI talks
 * to; configured by a single base-URL setting.
 */

import type { ApiErrorBody, ExplainRequest, ExplainResponse, WhatIfResponse } from './types.js';

export class ApiError extends Error {
  status: number;
  code: string;
  field?: string;

  constructor(status: number, code: string, message: string, field?: string) {
    super(message);
    this.status = status;
    this.code = code;
    if (field !== undefined) this.field = field;
  }
}

async function readError(response: Response): Promise<ApiError> {
  let code = 'http_error';
  let message = `request failed (${response.status})`;
  let field: string | undefined;
  try {
    const body = (await response.json()) as ApiErrorBody;
    if (body && body.error) {
      code = body.error.code;
      message = body.error.message;
      field = body.error.field;
    }
  } catch {
    // non-JSON error body; keep the generic message
  }
  return new ApiError(response.status, code, message, field);
}

export class ApiClient {
  constructor(private readonly baseUrl: string) {}

  private async post<T>(path: string, payload: unknown): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(payload),
    });
    if (!response.ok) throw await readError(response);
    return (await response.json()) as T;
  }

  explain(payload: ExplainRequest): Promise<ExplainResponse> {
    return this.post<ExplainResponse>('/explain', payload);
  }

  whatif(payload: ExplainRequest): Promise<WhatIfResponse> {
    return this.post<WhatIfResponse>('/whatif', payload);
  }

  async health(): Promise<boolean> {
    try {
      const response = await fetch(`${this.baseUrl}/health`);
      return response.ok;
    } catch {
      return false;
    }
  }
}

/** Base URL: ?api=... query parameter, else a global override, else same-ish host. */
export function resolveBaseUrl(location: Location, override?: string): string {
  if (override) return override.replace(/\/$/, '');
  const fromQuery = new URLSearchParams(location.search).get('api');
  if (fromQuery) return fromQuery.replace(/\/$/, '');
  return 'http://127.0.0.1:8000';
}
