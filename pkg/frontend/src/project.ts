// World-to-canvas projection for the footprint map. World frame: x grows
// East, y grows North; the canvas y axis points down, so north is up on
// screen.

import type { PathDoc, Pose } from "./api.js";

export interface XY {
  x: number;
  y: number;
}

export interface MapView {
  width: number;
  height: number;
  scale: number; // px per meter
  cx: number; // world point mapped to the canvas center
  cy: number;
}

// Scale used when the path has no extent yet (origin marker only).
export const DEFAULT_SCALE = 50;
export const MAX_SCALE = 400;
export const MIN_SCALE = 1e-3;
export const PAD_PX = 24;

const EXTENT_EPS = 1e-6;

export function computeView(
  points: XY[],
  width: number,
  height: number,
  padding = PAD_PX,
): MapView {
  if (points.length === 0) {
    return { width, height, scale: DEFAULT_SCALE, cx: 0, cy: 0 };
  }
  let minX = Infinity;
  let maxX = -Infinity;
  let minY = Infinity;
  let maxY = -Infinity;
  for (const p of points) {
    if (p.x < minX) minX = p.x;
    if (p.x > maxX) maxX = p.x;
    if (p.y < minY) minY = p.y;
    if (p.y > maxY) maxY = p.y;
  }
  const spanX = maxX - minX;
  const spanY = maxY - minY;
  const cx = (minX + maxX) / 2;
  const cy = (minY + maxY) / 2;
  if (Math.max(spanX, spanY) < EXTENT_EPS) {
    return { width, height, scale: DEFAULT_SCALE, cx, cy };
  }
  const fitX = spanX > EXTENT_EPS ? (width - 2 * padding) / spanX : Infinity;
  const fitY = spanY > EXTENT_EPS ? (height - 2 * padding) / spanY : Infinity;
  const scale = Math.min(Math.max(Math.min(fitX, fitY), MIN_SCALE), MAX_SCALE);
  return { width, height, scale, cx, cy };
}

export function worldToPx(view: MapView, p: XY): XY {
  return {
    x: view.width / 2 + (p.x - view.cx) * view.scale,
    y: view.height / 2 - (p.y - view.cy) * view.scale,
  };
}

// The drawn track: origin, then each closed segment's endpoint, then the
// live cursor. Everything here came from the server.
export function pathPoints(doc: PathDoc): Pose[] {
  return [doc.origin, ...doc.waypoints, doc.cursor];
}

export function polylinePoints(view: MapView, points: XY[]): string {
  return points
    .map((p) => {
      const q = worldToPx(view, p);
      return `${round3(q.x)},${round3(q.y)}`;
    })
    .join(" ");
}

export function sparklinePoints(
  values: number[],
  width: number,
  height: number,
  pad = 3,
): string {
  if (values.length === 0) return "";
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  const innerH = height - 2 * pad;
  const stepX = values.length > 1 ? width / (values.length - 1) : 0;
  return values
    .map((v, i) => {
      // a constant series draws as a midline
      const norm = hi - lo < 1e-12 ? 0.5 : (v - lo) / (hi - lo);
      const x = values.length > 1 ? i * stepX : width / 2;
      const y = pad + (1 - norm) * innerH;
      return `${round3(x)},${round3(y)}`;
    })
    .join(" ");
}

function round3(v: number): number {
  return Math.round(v * 1000) / 1000;
}
