/** Linear scales and a diverging blue-white-red color ramp. */

export interface LinearScale {
  (value: number): number
  domain: [number, number]
  range: [number, number]
}

export function linearScale(domain: [number, number], range: [number, number]): LinearScale {
  const [d0, d1] = domain
  const [r0, r1] = range
  const span = d1 - d0 || 1
  const fn = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as LinearScale
  fn.domain = domain
  fn.range = range
  return fn
}

function channel(a: number, b: number, t: number): number {
  return Math.round(a + (b - a) * t)
}

const NEG = [33, 102, 172] // blue
const MID = [247, 247, 247] // near-white
const POS = [178, 24, 43] // red

/** Diverging color centered on zero over a symmetric extent. */
export function divergingColor(value: number, extent: number): string {
  if (extent <= 0) extent = 1
  const t = Math.max(-1, Math.min(1, value / extent))
  const [from, to] = t < 0 ? [MID, NEG] : [MID, POS]
  const u = Math.abs(t)
  return `rgb(${channel(from[0], to[0], u)},${channel(from[1], to[1], u)},${channel(from[2], to[2], u)})`
}
