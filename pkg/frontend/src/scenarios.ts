/**
 * Scenario panel helpers: cards from a what-if response and the diff
 * between a baseline flower and a post-scenario flower.
 */

import type { FactorId, FlowerLayout, ScenarioEntry, WhatIfResponse } from './types.js';

export interface ScenarioCard {
  kind: string;
  description: string;
  /** display strings straight from the service, never re-rounded */
  beforeDisplay: string;
  afterDisplay: string;
  /** surrogate risk reduction as a fraction, for ordering and bars */
  delta: number;
}

export function scenarioCards(response: WhatIfResponse): ScenarioCard[] {
  return response.scenarios.map((entry: ScenarioEntry) => ({
    kind: entry.kind,
    description: entry.description,
    beforeDisplay: entry.display.before,
    afterDisplay: entry.display.after,
    delta: entry.delta.surrogate,
  }));
}

export function scenarioByKind(response: WhatIfResponse, kind: string): ScenarioEntry | null {
  return response.scenarios.find((entry) => entry.kind === kind) ?? null;
}

/**
 * Factors whose petal changed between two flowers of the same model
 * (selecting a scenario must shrink only the modified factor's petal).
 */
export function changedPetals(baseline: FlowerLayout, after: FlowerLayout): FactorId[] {
  const changed: FactorId[] = [];
  for (const petal of baseline.petals) {
    const counterpart = after.petals.find((p) => p.factor_id === petal.factor_id);
    if (!counterpart) {
      changed.push(petal.factor_id);
      continue;
    }
    if (
      counterpart.length !== petal.length ||
      counterpart.eta !== petal.eta ||
      counterpart.gamma !== petal.gamma ||
      counterpart.start_angle !== petal.start_angle
    ) {
      changed.push(petal.factor_id);
    }
  }
  return changed;
}
