/** Map what-if responses to chart series. Every plotted number is taken
 * verbatim from the service response; this module only reshapes. */

import type { NeighborhoodStats, WhatIfResponse } from './types.js'

export interface ChartPoint {
  supply: number
  demand: number
}

export interface ChartSeries {
  model: string
  kind: string
  points: ChartPoint[]
}

export interface ScenarioPanel {
  label: string
  series: ChartSeries[]
  neighborhood: NeighborhoodStats
  extrapolation: boolean
}

export function toSeries(response: WhatIfResponse): ChartSeries[] {
  return response.curves.map((c) => ({
    model: c.model,
    kind: c.kind,
    points: c.supply_cars.map((s, i) => ({
      supply: s,
      demand: c.demand_trips_per_month[i],
    })),
  }))
}

/** Side-by-side panels for pinned scenarios (the three-scenario view). */
export function toPanels(
  pinned: { label: string; response: WhatIfResponse }[],
): ScenarioPanel[] {
  return pinned.map((p) => ({
    label: p.label,
    series: toSeries(p.response),
    neighborhood: p.response.neighborhood_3km,
    extrapolation: p.response.extrapolation_warning,
  }))
}

/** Shared y-extent across panels so side-by-side curves are comparable. */
export function demandExtent(panels: ScenarioPanel[]): [number, number] {
  let lo = Infinity
  let hi = -Infinity
  for (const panel of panels) {
    for (const s of panel.series) {
      for (const pt of s.points) {
        lo = Math.min(lo, pt.demand)
        hi = Math.max(hi, pt.demand)
      }
    }
  }
  if (!isFinite(lo)) return [0, 1]
  return [Math.min(lo, 0), hi]
}
