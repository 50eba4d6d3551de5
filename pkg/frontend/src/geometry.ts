/** Client-side hit testing and constraint counting. No affinity math here. */

export interface Point {
  x: number;
  y: number;
}

export interface WordBox {
  id: number;
  x: number;
  y: number;
  w: number;
  h: number;
}

export function center(box: WordBox): Point {
  return { x: box.x + box.w / 2, y: box.y + box.h / 2 };
}

/** Ray-casting point-in-polygon; polygon vertices in order, any winding. */
export function pointInPolygon(p: Point, polygon: Point[]): boolean {
  let inside = false;
  const n = polygon.length;
  for (let i = 0, j = n - 1; i < n; j = i++) {
    const a = polygon[i];
    const b = polygon[j];
    const crosses = a.y > p.y !== b.y > p.y;
    if (crosses && p.x < ((b.x - a.x) * (p.y - a.y)) / (b.y - a.y) + a.x) {
      inside = !inside;
    }
  }
  return inside;
}

/** Word ids whose bbox centers fall inside the lasso polygon. */
export function lassoSelect(words: WordBox[], polygon: Point[]): number[] {
  if (polygon.length < 3) return [];
  return words.filter((w) => pointInPolygon(center(w), polygon)).map((w) => w.id);
}

export function mustPairCount(groupSize: number): number {
  return (groupSize * (groupSize - 1)) / 2;
}

export function cannotPairCount(sizeA: number, sizeB: number): number {
  return sizeA * sizeB;
}
