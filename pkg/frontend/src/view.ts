// World (display-plane meters, origin bottom-left) <-> canvas pixels.

import type { Point } from "./protocol";

export interface ViewConfig {
  fovWidth: number; // meters, simulated AR field of view
  fovHeight: number;
  pixelsPerMeter: number;
  baseLinkWidth: number; // meters; a link of weight w draws w times wider
}

export const DEFAULT_VIEW: ViewConfig = {
  fovWidth: 1.0,
  fovHeight: 0.55,
  pixelsPerMeter: 420,
  baseLinkWidth: 0.006,
};

export interface Rect {
  x: number;
  y: number;
  w: number;
  h: number;
}

export class Transform {
  constructor(
    readonly ppm: number,
    readonly extentH: number,
    readonly offsetX = 0,
    readonly offsetY = 0,
  ) {}

  static fit(extent: { w: number; h: number }, canvasW: number, canvasH: number): Transform {
    const ppm = Math.min(canvasW / extent.w, canvasH / extent.h);
    return new Transform(ppm, extent.h, (canvasW - extent.w * ppm) / 2, (canvasH - extent.h * ppm) / 2);
  }

  toScreen(p: Point): Point {
    return [this.offsetX + p[0] * this.ppm, this.offsetY + (this.extentH - p[1]) * this.ppm];
  }

  toWorld(sx: number, sy: number): Point {
    return [(sx - this.offsetX) / this.ppm, this.extentH - (sy - this.offsetY) / this.ppm];
  }

  length(meters: number): number {
    return meters * this.ppm;
  }
}

export function fovRect(gaze: Point, view: ViewConfig): Rect {
  return {
    x: gaze[0] - view.fovWidth / 2,
    y: gaze[1] - view.fovHeight / 2,
    w: view.fovWidth,
    h: view.fovHeight,
  };
}

export function pointInRect(p: Point, r: Rect): boolean {
  return p[0] >= r.x && p[0] <= r.x + r.w && p[1] >= r.y && p[1] <= r.y + r.h;
}

/** Liang-Barsky segment clip; null when fully outside. */
export function clipSegmentToRect(a: Point, b: Point, r: Rect): [Point, Point] | null {
  const dx = b[0] - a[0];
  const dy = b[1] - a[1];
  let t0 = 0;
  let t1 = 1;
  const edges: [number, number][] = [
    [-dx, a[0] - r.x],
    [dx, r.x + r.w - a[0]],
    [-dy, a[1] - r.y],
    [dy, r.y + r.h - a[1]],
  ];
  for (const [p, q] of edges) {
    if (p === 0) {
      if (q < 0) return null;
      continue;
    }
    const t = q / p;
    if (p < 0) {
      if (t > t1) return null;
      if (t > t0) t0 = t;
    } else {
      if (t < t0) return null;
      if (t < t1) t1 = t;
    }
  }
  return [
    [a[0] + t0 * dx, a[1] + t0 * dy],
    [a[0] + t1 * dx, a[1] + t1 * dy],
  ];
}

/** Clip a polyline to a rect, splitting it into visible runs. */
export function clipPolylineToRect(points: Point[], r: Rect): Point[][] {
  const runs: Point[][] = [];
  let current: Point[] = [];
  for (let i = 0; i + 1 < points.length; i++) {
    const seg = clipSegmentToRect(points[i], points[i + 1], r);
    if (seg === null) {
      if (current.length > 1) runs.push(current);
      current = [];
      continue;
    }
    const [p, q] = seg;
    if (current.length === 0) {
      current.push(p);
    } else {
      const last = current[current.length - 1];
      if (Math.hypot(last[0] - p[0], last[1] - p[1]) > 1e-12) {
        runs.push(current);
        current = [p];
      }
    }
    current.push(q);
  }
  if (current.length > 1) runs.push(current);
  return runs;
}
