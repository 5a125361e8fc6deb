/**
 * Scatter rendering and picking helpers. The renderer draws into any
 * 2-D-canvas-like context so it can run headless in tests; at scale it
 * decimates points when zoomed out (level of detail) and picks through a
 * uniform grid index instead of per-pixel readback.
 */

import { Camera, ColorMode } from './types';

export interface Canvas2DLike {
  fillStyle: string;
  fillRect(x: number, y: number, w: number, h: number): void;
  clearRect(x: number, y: number, w: number, h: number): void;
}

const PALETTE = [
  '#4477aa',
  '#ee6677',
  '#228833',
  '#ccbb44',
  '#66ccee',
  '#aa3377',
  '#bbbbbb',
];

export function colorFor(
  mode: ColorMode,
  categorical: string | null,
  voteFraction: number | null,
  legend: string[],
): string {
  if (mode === 'probe_vote') {
    if (voteFraction === null) {
      return PALETTE[0];
    }
    // ramp from pale to saturated red by vote fraction
    const level = Math.round(255 - 155 * Math.min(1, Math.max(0, voteFraction)));
    return `rgb(255,${level},${level})`;
  }
  const key = categorical ?? '(none)';
  const index = legend.indexOf(key);
  return PALETTE[(index < 0 ? legend.length : index) % PALETTE.length];
}

export function dataToScreen(
  x: number,
  y: number,
  camera: Camera,
  width: number,
  height: number,
): [number, number] {
  return [
    (x - camera.centerX) * camera.scale + width / 2,
    (y - camera.centerY) * camera.scale + height / 2,
  ];
}

export function screenToData(
  sx: number,
  sy: number,
  camera: Camera,
  width: number,
  height: number,
): [number, number] {
  return [
    (sx - width / 2) / camera.scale + camera.centerX,
    (sy - height / 2) / camera.scale + camera.centerY,
  ];
}

/**
 * Indices to draw at the current zoom. Zoomed out, at most one point per
 * screen-space cell is kept; zoomed in, everything in view is drawn, so
 * every member of a small cluster stays individually visible and pickable.
 */
export function decimate(
  coords: Float32Array,
  camera: Camera,
  width: number,
  height: number,
  cellPx = 2,
): number[] {
  const n = coords.length / 2;
  const kept: number[] = [];
  const seen = new Set<number>();
  const columns = Math.ceil(width / cellPx);
  for (let i = 0; i < n; i++) {
    const [sx, sy] = dataToScreen(coords[2 * i], coords[2 * i + 1], camera, width, height);
    if (sx < 0 || sy < 0 || sx >= width || sy >= height) {
      continue;
    }
    const cell =
      Math.floor(sy / cellPx) * columns + Math.floor(sx / cellPx);
    if (!seen.has(cell)) {
      seen.add(cell);
      kept.push(i);
    }
  }
  return kept;
}

export function renderScatter(
  ctx: Canvas2DLike,
  coords: Float32Array,
  colors: string[],
  camera: Camera,
  width: number,
  height: number,
  pointSize = 3,
): number {
  ctx.clearRect(0, 0, width, height);
  const indices = decimate(coords, camera, width, height);
  for (const i of indices) {
    const [sx, sy] = dataToScreen(coords[2 * i], coords[2 * i + 1], camera, width, height);
    ctx.fillStyle = colors[i];
    ctx.fillRect(sx - pointSize / 2, sy - pointSize / 2, pointSize, pointSize);
  }
  return indices.length;
}

/** Uniform-grid spatial index over data space for cursor picking. */
export class GridIndex {
  private cells = new Map<string, number[]>();
  private readonly cellSize: number;

  constructor(
    private readonly coords: Float32Array,
    cellSize: number,
  ) {
    if (cellSize <= 0) {
      throw new Error('cellSize must be positive');
    }
    this.cellSize = cellSize;
    for (let i = 0; i * 2 + 1 < coords.length; i++) {
      const key = this.key(coords[2 * i], coords[2 * i + 1]);
      const bucket = this.cells.get(key);
      if (bucket) {
        bucket.push(i);
      } else {
        this.cells.set(key, [i]);
      }
    }
  }

  private key(x: number, y: number): string {
    return `${Math.floor(x / this.cellSize)},${Math.floor(y / this.cellSize)}`;
  }

  /** Index of the nearest point within radius, or null. */
  pick(x: number, y: number, radius: number): number | null {
    const r = Math.ceil(radius / this.cellSize);
    const cx = Math.floor(x / this.cellSize);
    const cy = Math.floor(y / this.cellSize);
    let best: number | null = null;
    let bestDistSq = radius * radius;
    for (let gx = cx - r; gx <= cx + r; gx++) {
      for (let gy = cy - r; gy <= cy + r; gy++) {
        const bucket = this.cells.get(`${gx},${gy}`);
        if (!bucket) {
          continue;
        }
        for (const i of bucket) {
          const dx = this.coords[2 * i] - x;
          const dy = this.coords[2 * i + 1] - y;
          const distSq = dx * dx + dy * dy;
          if (distSq <= bestDistSq) {
            bestDistSq = distSq;
            best = i;
          }
        }
      }
    }
    return best;
  }
}
