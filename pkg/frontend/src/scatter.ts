/** Affinity-space scatter: one dot per word, colored by its cluster. */

import type { ClusterInfo, ScatterPoint } from "./api.js";

export interface ScatterDot {
  wordId: number;
  px: number;
  py: number;
  color: string;
}

/** Map projection coordinates into a width x height viewport with padding. */
export function layoutScatter(
  points: ScatterPoint[],
  clusters: ClusterInfo[],
  width: number,
  height: number,
  pad = 12,
): ScatterDot[] {
  if (points.length === 0) return [];
  const colorOf = new Map(clusters.map((c) => [c.id, c.color]));
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const xSpan = xMax - xMin || 1;
  const ySpan = yMax - yMin || 1;
  return points.map((p) => ({
    wordId: p.word_id,
    px: pad + ((p.x - xMin) / xSpan) * (width - 2 * pad),
    py: pad + ((p.y - yMin) / ySpan) * (height - 2 * pad),
    color: colorOf.get(p.cluster_id) ?? "#999999",
  }));
}

export function scatterSvg(
  points: ScatterPoint[],
  clusters: ClusterInfo[],
  width = 320,
  height = 320,
): string {
  const dots = layoutScatter(points, clusters, width, height);
  const circles = dots
    .map(
      (d) =>
        `<circle cx="${d.px.toFixed(1)}" cy="${d.py.toFixed(1)}" r="3.5" ` +
        `fill="${d.color}" data-word-id="${d.wordId}"><title>word ${d.wordId}</title></circle>`,
    )
    .join("");
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}">` +
    `<rect width="${width}" height="${height}" fill="#fafafa"/>` +
    circles +
    `</svg>`
  );
}
