/**
 * Lasso geometry: even-odd (ray casting) point-in-polygon, plus the
 * selection helper that filters embedding points by a lasso polygon.
 */

export type Point = [number, number];

/**
 * Even-odd rule with the half-open edge convention: a point exactly on a
 * vertex or edge counts as inside when the crossing test says so, which
 * is stable for lasso use where boundary points are rare.
 */
export function pointInPolygon(x: number, y: number, polygon: Point[]): boolean {
  let inside = false;
  const n = polygon.length;
  for (let i = 0, j = n - 1; i < n; j = i++) {
    const [xi, yi] = polygon[i];
    const [xj, yj] = polygon[j];
    const crosses =
      yi > y !== yj > y && x < ((xj - xi) * (y - yi)) / (yj - yi) + xi;
    if (crosses) {
      inside = !inside;
    }
  }
  return inside;
}

/** Indices of the interleaved (x, y) coords that fall inside the lasso. */
export function lassoSelect(coords: Float32Array, polygon: Point[]): number[] {
  if (polygon.length < 3) {
    return [];
  }
  const selected: number[] = [];
  for (let i = 0; i * 2 + 1 < coords.length; i++) {
    if (pointInPolygon(coords[i * 2], coords[i * 2 + 1], polygon)) {
      selected.push(i);
    }
  }
  return selected;
}
