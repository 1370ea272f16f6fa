/** Coefficient choropleth: join the coefficient export with station
 * Voronoi cells, carry significance flags, and compute the legend range
 * from exactly the rendered values. */

import type { CoefficientRow, StationsResponse } from './types.js'
import { divergingColor } from './scale.js'

export interface CoefficientCell {
  stationId: string
  polygon: [number, number][]
  value: number
  t: number
  se: number
  significant: boolean
}

export interface CoefficientLayer {
  feature: string
  cells: CoefficientCell[]
  /** legend spans the rendered values exactly */
  legend: { min: number; max: number }
  /** symmetric color extent around zero */
  colorExtent: number
}

export class UnknownFeatureError extends Error {
  constructor(feature: string, available: string[]) {
    super(`unknown feature '${feature}'; available: ${available.join(', ')}`)
  }
}

export function buildCoefficientLayer(
  rows: CoefficientRow[],
  stations: StationsResponse,
  feature: string,
): CoefficientLayer {
  const features = [...new Set(rows.map((r) => r.feature))]
  if (!features.includes(feature)) {
    throw new UnknownFeatureError(feature, features)
  }
  const byStation = new Map(
    rows.filter((r) => r.feature === feature).map((r) => [r.station_id, r]),
  )
  const cells: CoefficientCell[] = []
  for (const s of stations.stations) {
    const row = byStation.get(s.station_id)
    if (!row) continue
    cells.push({
      stationId: s.station_id,
      polygon: s.voronoi_cell,
      value: row.beta,
      t: row.t,
      se: row.se,
      significant: row.significant,
    })
  }
  const values = cells.map((c) => c.value)
  const min = Math.min(...values)
  const max = Math.max(...values)
  return {
    feature,
    cells,
    legend: { min, max },
    colorExtent: Math.max(Math.abs(min), Math.abs(max)),
  }
}

/** Fill color for a cell; insignificant cells are washed out via opacity
 * (handled by cellOpacity) so they stay visually distinguished. */
export function cellColor(layer: CoefficientLayer, cell: CoefficientCell): string {
  return divergingColor(cell.value, layer.colorExtent)
}

export function cellOpacity(cell: CoefficientCell): number {
  return cell.significant ? 0.95 : 0.25
}

export function tooltipText(cell: CoefficientCell): string {
  const sig = cell.significant ? 'significant' : 'not significant'
  return (
    `${cell.stationId}: β = ${cell.value.toPrecision(4)}, ` +
    `t = ${cell.t.toPrecision(3)} (${sig} at adjusted α)`
  )
}
