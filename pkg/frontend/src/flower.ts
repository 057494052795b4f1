/**
 * Flower SVG construction from service geometry.
 *
 * The client draws from the FlowerLayout payload (not the server-rendered
 * SVG) so petals stay addressable for hover highlighting and scenario
 * overlays. Output is an SVG string; the app injects it and wires events
 * via data-factor attributes.
 */

import { sampleBoundary, samplePetalOutline } from './geometry.js';
import type { ColorClass, FactorId, FlowerLayout, PatientForm } from './types.js';

export const COLOR_FILL: Record<ColorClass, string> = {
  green: '#43a047',
  orange: '#fb8c00',
  red: '#e53935',
};

export const FACTOR_NAMES: Record<FactorId, string> = {
  age: 'Age',
  sbp: 'Systolic BP',
  smoking: 'Smoking',
  nonhdl: 'Non-HDL chol.',
};

export interface FlowerViewOptions {
  size?: number;
  colorClass: ColorClass;
  /** overlay geometry (post-scenario flower), drawn as outlines on top */
  overlay?: FlowerLayout | null;
  /** numeric per-factor contributions, shown only when toggled on */
  contributions?: Record<FactorId, number> | null;
  patient?: PatientForm | null;
  highlight?: FactorId | null;
}

const GRID_LEVELS = [0.25, 0.5, 0.75, 1];

function fmt(value: number): string {
  return value.toFixed(2);
}

function factorValueLabel(factor: FactorId, patient: PatientForm): string {
  switch (factor) {
    case 'age':
      return `${Math.round(patient.age)} y`;
    case 'sbp':
      return `${Math.round(patient.sbp)} mmHg`;
    case 'smoking':
      return patient.smoking ? 'yes' : 'no';
    case 'nonhdl':
      return `${(patient.total_chol - patient.hdl_chol).toFixed(1)} mmol/L`;
  }
}

function pathFrom(points: Array<[number, number]>, cx: number, cy: number, scale: number, close: boolean): string {
  const parts = points.map(([x, y], index) => {
    const sx = cx + scale * x;
    const sy = cy - scale * y;
    return `${index === 0 ? 'M' : 'L'} ${fmt(sx)},${fmt(sy)}`;
  });
  if (close) parts.push('Z');
  return parts.join(' ');
}

/** Render one flower (and an optional scenario overlay) to an SVG string. */
export function renderFlower(layout: FlowerLayout, options: FlowerViewOptions): string {
  const size = options.size ?? 460;
  const cx = size / 2;
  const cy = size / 2;
  const scale = size * 0.33;
  const fill = COLOR_FILL[options.colorClass];
  const pieces: string[] = [];
  pieces.push(
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${size} ${size}" width="${size}" height="${size}">`,
  );

  pieces.push('<g class="petals">');
  for (const petal of layout.petals) {
    const outline = samplePetalOutline(petal, layout.kappa);
    const dim = options.highlight && options.highlight !== petal.factor_id;
    pieces.push(
      `<path class="petal${dim ? ' dim' : ''}" data-factor="${petal.factor_id}" ` +
        `d="${pathFrom(outline, cx, cy, scale, true)}" fill="${fill}" ` +
        `fill-opacity="${dim ? '0.35' : '0.9'}" stroke="#31363b" stroke-width="1"/>`,
    );
  }
  pieces.push('</g>');

  pieces.push('<g class="grid" fill="none" stroke="#777" stroke-width="0.7" stroke-dasharray="3 3">');
  for (const petal of layout.petals) {
    const levels = petal.factor_id === 'smoking' ? [1] : GRID_LEVELS;
    for (const level of levels) {
      const boundary = sampleBoundary(petal, layout.kappa, Math.sqrt(level));
      pieces.push(
        `<path class="grid-line" data-factor="${petal.factor_id}" data-level="${level}" ` +
          `d="${pathFrom(boundary, cx, cy, scale, false)}"/>`,
      );
    }
  }
  pieces.push('</g>');

  if (options.overlay) {
    pieces.push('<g class="overlay" fill="none" stroke="#1653b8" stroke-width="2">');
    for (const petal of options.overlay.petals) {
      const outline = samplePetalOutline(petal, options.overlay.kappa);
      pieces.push(
        `<path class="overlay-petal" data-factor="${petal.factor_id}" ` +
          `d="${pathFrom(outline, cx, cy, scale, true)}"/>`,
      );
    }
    pieces.push('</g>');
  }

  pieces.push('<g class="labels" font-size="12" font-family="sans-serif">');
  for (const petal of layout.petals) {
    const mid = petal.start_angle + petal.gamma / 2;
    const radius = scale + 26;
    const x = cx + radius * Math.sin(mid);
    const y = cy - radius * Math.cos(mid);
    const value = options.patient ? `: ${factorValueLabel(petal.factor_id, options.patient)}` : '';
    pieces.push(
      `<text data-factor="${petal.factor_id}" x="${fmt(x)}" y="${fmt(y)}" ` +
        `text-anchor="middle">${FACTOR_NAMES[petal.factor_id]}${value}</text>`,
    );
    if (options.contributions) {
      const pct = (100 * options.contributions[petal.factor_id]).toFixed(1);
      const ix = cx + scale * 0.55 * Math.sin(mid);
      const iy = cy - scale * 0.55 * Math.cos(mid);
      pieces.push(
        `<text class="contribution" data-factor="${petal.factor_id}" x="${fmt(ix)}" ` +
          `y="${fmt(iy)}" text-anchor="middle" font-size="11">${pct}%</text>`,
      );
    }
  }
  pieces.push('</g>');

  pieces.push('</svg>');
  return pieces.join('\n');
}
