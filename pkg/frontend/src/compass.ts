// Virtual compass. Headings are degrees clockwise from North, which is
// exactly what an SVG rotate() of an up-pointing needle expects.

export function needleAngle(compassDeg: number): number {
  return norm360(compassDeg);
}

export function norm360(deg: number): number {
  const r = deg % 360;
  return r < 0 ? r + 360 : r;
}

// Signed shortest angular difference a - b in (-180, 180].
export function circularDelta(a: number, b: number): number {
  let d = norm360(a) - norm360(b);
  if (d > 180) d -= 360;
  if (d <= -180) d += 360;
  return d;
}

const CARDINALS = [
  "N", "NNE", "NE", "ENE", "E", "ESE", "SE", "SSE",
  "S", "SSW", "SW", "WSW", "W", "WNW", "NW", "NNW",
];

export function cardinalName(compassDeg: number): string {
  const idx = Math.round(norm360(compassDeg) / 22.5) % 16;
  return CARDINALS[idx];
}
