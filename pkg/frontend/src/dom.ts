/** Helpers shared by the app shell; kept DOM-light so tests can cover them. */

import type { WordBox } from "./geometry.js";

const RECT_RE =
  /<rect x="([\d.]+)" y="([\d.]+)" width="([\d.]+)" height="([\d.]+)"[^>]*data-word-id="(\d+)"/g;

/**
 * Recover word boxes (page pixels) from a rendered document SVG. Only the
 * cluster overlay rects carry per-word geometry, so this works after a run.
 */
export function wordBoxesFromSvg(svg: string): WordBox[] {
  const out: WordBox[] = [];
  for (const m of svg.matchAll(RECT_RE)) {
    out.push({
      id: Number(m[5]),
      x: Number(m[1]),
      y: Number(m[2]),
      w: Number(m[3]),
      h: Number(m[4]),
    });
  }
  return out;
}

export interface DocumentFileWord {
  id: number;
  bbox: [number, number, number, number];
}

/** Word boxes scaled to page pixels from an uploaded document file. */
export function wordBoxesFromDocument(
  doc: { words: DocumentFileWord[] },
  pageW: number,
  pageH: number,
): WordBox[] {
  return doc.words.map((w) => ({
    id: w.id,
    x: w.bbox[0] * pageW,
    y: w.bbox[1] * pageH,
    w: w.bbox[2] * pageW,
    h: w.bbox[3] * pageH,
  }));
}
