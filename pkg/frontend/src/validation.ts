/**
 * Client-side input validation mirroring the clinical score-chart ranges.
 * The service re-validates; this layer exists to give field-level feedback
 * before any request is sent.
 */

import type { PatientForm } from './types.js';

export interface Range {
  min: number;
  max: number;
}

export const FACTOR_RANGES: Record<string, Range> = {
  age: { min: 45, max: 70 },
  sbp: { min: 100, max: 180 },
  total_chol: { min: 3, max: 9 },
  hdl_chol: { min: 0.7, max: 2.5 },
  non_hdl: { min: 3, max: 7 },
};

export type FieldErrors = Partial<Record<keyof PatientForm | 'non_hdl', string>>;

function checkRange(field: string, value: number): string | null {
  const range = FACTOR_RANGES[field];
  if (!range) return null;
  if (!Number.isFinite(value)) return 'enter a number';
  if (value < range.min || value > range.max) {
    return `must be between ${range.min} and ${range.max}`;
  }
  return null;
}

/**
 * Validate a patient form. Returns an empty object when the form may be
 * submitted; otherwise maps field names to messages.
 */
export function validatePatient(form: PatientForm): FieldErrors {
  const errors: FieldErrors = {};
  for (const field of ['age', 'sbp', 'total_chol', 'hdl_chol'] as const) {
    const problem = checkRange(field, form[field]);
    if (problem) errors[field] = problem;
  }
  if (!errors.total_chol && !errors.hdl_chol) {
    const nonHdl = form.total_chol - form.hdl_chol;
    if (nonHdl <= 0) {
      errors.hdl_chol = 'HDL must be below total cholesterol';
    } else {
      const problem = checkRange('non_hdl', nonHdl);
      if (problem) errors.non_hdl = `non-HDL cholesterol ${problem}`;
    }
  }
  return errors;
}

export function isValid(errors: FieldErrors): boolean {
  return Object.keys(errors).length === 0;
}
