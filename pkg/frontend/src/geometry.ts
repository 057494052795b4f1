/**
 * Client-side petal geometry.
 *
 * The service sends renderer-independent geometry (lobe counts, angular
 * spans, sqrt-lengths); this module turns one petal into a closed outline
 * so the client can draw, hover and overlay petals without server SVG.
 * Angles are radians clockwise from 12 o'clock; points are y-up and the
 * view layer flips the y axis for screen space.
 */

import type { FlowerLayout, PetalGeometry } from './types.js';

export type Point = [number, number];

function lobeRadius(kappa: number, length: number, t: number): number {
  // t in [0, 1] across one lobe; endpoints pinned so seams match exactly
  if (t <= 0 || t >= 1) return kappa * length;
  return kappa * length + (1 - kappa) * length * Math.sin(Math.PI * t);
}

function place(radius: number, angle: number): Point {
  return [radius * Math.sin(angle), radius * Math.cos(angle)];
}

/**
 * Closed outline of one petal: origin, lobed boundary, origin.
 * A zero-lobe or zero-length petal collapses to the flower centre.
 */
export function samplePetalOutline(
  petal: PetalGeometry,
  kappa: number,
  samplesPerLobe = 48,
): Point[] {
  if (samplesPerLobe < 8) throw new Error('need at least 8 samples per lobe');
  const points: Point[] = [[0, 0]];
  if (petal.eta > 0 && petal.length > 0) {
    const lobeAngle = petal.gamma / petal.eta;
    for (let lobe = 0; lobe < petal.eta; lobe++) {
      const first = lobe === 0 ? 0 : 1; // seam point already emitted
      for (let k = first; k < samplesPerLobe; k++) {
        const t = k / (samplesPerLobe - 1);
        const radius = lobeRadius(kappa, petal.length, t);
        points.push(place(radius, petal.start_angle + (lobe + t) * lobeAngle));
      }
    }
  }
  points.push([0, 0]);
  return points;
}

/**
 * Boundary-only polyline (no origin closure) at an arbitrary length,
 * used for the dotted grid levels.
 */
export function sampleBoundary(
  petal: PetalGeometry,
  kappa: number,
  length: number,
  samplesPerLobe = 48,
): Point[] {
  const scaled: PetalGeometry = { ...petal, length };
  const outline = samplePetalOutline(scaled, kappa, samplesPerLobe);
  return outline.length > 2 ? outline.slice(1, -1) : [[0, 0]];
}

/** Angular spans must tile the full circle (service invariant, re-checked). */
export function anglesSumToCircle(layout: FlowerLayout, tolerance = 1e-9): boolean {
  const total = layout.petals.reduce((acc, petal) => acc + petal.gamma, 0);
  return Math.abs(total - 2 * Math.PI) <= tolerance;
}

/** Shoelace area of a closed polyline (diagnostic aid). */
export function polygonArea(points: Point[]): number {
  let acc = 0;
  for (let i = 0; i < points.length; i++) {
    const [x0, y0] = points[i]!;
    const [x1, y1] = points[(i + 1) % points.length]!;
    acc += x0 * y1 - x1 * y0;
  }
  return Math.abs(acc) / 2;
}
