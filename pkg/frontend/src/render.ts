/** Deterministic SVG rendering: scatter with boundary overlay, density
 * pane with atom markers.  Pure functions of their payloads, so the same
 * payload always yields the identical string.
 */

import { AtomPayload, Histogram, MarginalPayload } from "./api.js";

export interface Extent {
  min: number;
  max: number;
}

export function extent(values: number[], pad = 0.05): Extent {
  if (values.length === 0) return { min: 0, max: 1 };
  let min = values[0];
  let max = values[0];
  for (const v of values) {
    if (v < min) min = v;
    if (v > max) max = v;
  }
  if (min === max) {
    min -= 0.5;
    max += 0.5;
  }
  const span = max - min;
  return { min: min - pad * span, max: max + pad * span };
}

export function scale(v: number, e: Extent, lo: number, hi: number): number {
  return lo + ((v - e.min) / (e.max - e.min)) * (hi - lo);
}

const fmt = (v: number): string => v.toFixed(2);

/** Scatter of (Y_kl, Y_ij) with the estimate as a horizontal boundary line
 * at Y_ij = omegaHat.
 */
export function scatterSvg(
  marginal: MarginalPayload,
  omegaHat: number | null,
  width = 480,
  height = 360,
): string {
  const ex = extent(marginal.y_kl);
  const ey = extent(
    omegaHat === null ? marginal.y_ij : [...marginal.y_ij, omegaHat],
  );
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" class="scatter">`,
  ];
  for (let p = 0; p < marginal.y_ij.length; p++) {
    const cx = scale(marginal.y_kl[p], ex, 10, width - 10);
    const cy = scale(marginal.y_ij[p], ey, height - 10, 10);
    parts.push(`<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="1.2"/>`);
  }
  if (omegaHat !== null) {
    const y = scale(omegaHat, ey, height - 10, 10);
    parts.push(
      `<line class="boundary" x1="0" y1="${fmt(y)}" x2="${width}" y2="${fmt(y)}"/>`,
    );
    parts.push(
      `<text x="4" y="${fmt(y - 4)}" class="boundary-label">ω̂ = ${omegaHat.toFixed(4)}</text>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}

/** 1-D density of Y_ij from the histogram bins, with atom markers. */
export function densitySvg(
  histogram: Histogram,
  atoms: AtomPayload | null,
  omegaHat: number | null,
  width = 480,
  height = 140,
): string {
  const ex: Extent = {
    min: histogram.edges[0],
    max: histogram.edges[histogram.edges.length - 1],
  };
  const peak = Math.max(...histogram.counts, 1);
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" class="density">`,
  ];
  for (let b = 0; b < histogram.counts.length; b++) {
    const x0 = scale(histogram.edges[b], ex, 0, width);
    const x1 = scale(histogram.edges[b + 1], ex, 0, width);
    const h = (histogram.counts[b] / peak) * (height - 24);
    parts.push(
      `<rect x="${fmt(x0)}" y="${fmt(height - 20 - h)}" width="${fmt(x1 - x0)}" height="${fmt(h)}"/>`,
    );
  }
  if (atoms !== null) {
    for (const atom of atoms.atoms) {
      const x = scale(atom.location, ex, 0, width);
      parts.push(
        `<line class="atom" x1="${fmt(x)}" y1="0" x2="${fmt(x)}" y2="${height - 16}"/>`,
      );
      parts.push(
        `<text x="${fmt(x + 2)}" y="${height - 4}" class="atom-label">${atom.location.toFixed(3)}</text>`,
      );
    }
  }
  if (omegaHat !== null && omegaHat >= ex.min && omegaHat <= ex.max) {
    const x = scale(omegaHat, ex, 0, width);
    parts.push(
      `<line class="boundary" x1="${fmt(x)}" y1="0" x2="${fmt(x)}" y2="${height}"/>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}

/** Comparison badge text for the mixture estimate, or the refusal banner. */
export function gmmBadge(estimate: number | null, unavailable: string | null): string {
  if (estimate !== null) return `GMM: ${estimate.toFixed(4)}`;
  if (unavailable !== null) return `GMM unavailable — ${unavailable}`;
  return "GMM: —";
}
