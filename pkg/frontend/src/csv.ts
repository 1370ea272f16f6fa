/** Minimal CSV parsing for the coefficient export (plain numeric fields,
 * no quoting in this format). */

import type { CoefficientRow } from './types.js'

export function parseCsv(text: string): Record<string, string>[] {
  const lines = text.trim().split(/\r?\n/)
  if (lines.length < 1) return []
  const header = lines[0].split(',')
  return lines.slice(1).map((line) => {
    const cells = line.split(',')
    const row: Record<string, string> = {}
    header.forEach((h, i) => {
      row[h] = cells[i] ?? ''
    })
    return row
  })
}

export function parseCoefficients(text: string): CoefficientRow[] {
  return parseCsv(text).map((r) => ({
    station_id: r.station_id,
    x_m: Number(r.x_m),
    y_m: Number(r.y_m),
    feature: r.feature,
    beta: Number(r.beta),
    se: Number(r.se),
    t: Number(r.t),
    significant: r.significant === 'True' || r.significant === 'true',
  }))
}

export function coefficientFeatures(rows: CoefficientRow[]): string[] {
  return [...new Set(rows.map((r) => r.feature))]
}
