/**
 * Wire types for the risk service HTTP API.
 */

export type SexValue = 'male' | 'female';
export type FactorId = 'age' | 'sbp' | 'smoking' | 'nonhdl';
export type ColorClass = 'green' | 'orange' | 'red';

export const FACTOR_IDS: readonly FactorId[] = ['age', 'sbp', 'smoking', 'nonhdl'];

/** Patient payload mirroring the cohort CSV schema minus the exclusion flags. */
export interface PatientForm {
  sex: SexValue;
  age: number;
  smoking: boolean;
  sbp: number;
  total_chol: number;
  hdl_chol: number;
}

export interface ExplainRequest extends PatientForm {
  region?: string;
  clamp?: boolean;
  include_svg?: boolean;
  include_outline?: boolean;
}

/** One petal of the renderer-independent flower geometry. */
export interface PetalGeometry {
  factor_id: FactorId;
  /** integer lobe count */
  eta: number;
  /** angular span in radians */
  gamma: number;
  /** radians clockwise from 12 o'clock */
  start_angle: number;
  /** sqrt of the normalized factor value */
  length: number;
  outline?: Array<[number, number]>;
}

export interface FlowerLayout {
  total_lobes: number;
  kappa: number;
  start_offset: number;
  petals: PetalGeometry[];
}

export interface RiskDisplay {
  risk_score2: string;
  risk_surrogate: string;
}

export interface ExplainResponse {
  risk_score2: number;
  risk_surrogate: number;
  contributions: Record<FactorId, number>;
  flower: FlowerLayout;
  svg: string | null;
  color_class: ColorClass;
  display: RiskDisplay;
  clamped_fields: string[];
}

export interface ScenarioEntry {
  kind: string;
  description: string;
  before: { score2: number; surrogate: number };
  after: { score2: number; surrogate: number };
  delta: { score2: number; surrogate: number };
  display: { before: string; after: string };
  flower_after: FlowerLayout;
}

export interface WhatIfResponse {
  scenarios: ScenarioEntry[];
}

/** Error envelope: {"error": {"code", "field?", "message"}}. */
export interface ApiErrorBody {
  error: { code: string; field?: string; message: string };
}
