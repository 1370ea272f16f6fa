/** SVG renderers. Pure string builders over the data modules, so the
 * contract tests can assert rendered numbers without a DOM. */

import { cellColor, cellOpacity, type CoefficientLayer } from './choropleth.js'
import { demandExtent, type ChartSeries, type ScenarioPanel } from './curves.js'
import { linearScale } from './scale.js'
import type { StationsResponse } from './types.js'

export const SERIES_COLORS = ['#1b7837', '#762a83', '#e08214', '#2166ac']

function extent(values: number[]): [number, number] {
  return [Math.min(...values), Math.max(...values)]
}

export interface MapGeometry {
  width: number
  height: number
  toScreen(x: number, y: number): [number, number]
}

/** Projected-coordinate canvas; y flips so north is up. */
export function mapGeometry(stations: StationsResponse, width = 640, height = 480): MapGeometry {
  const xs = stations.boundary.map((p) => p[0])
  const ys = stations.boundary.map((p) => p[1])
  const pad = 12
  const sx = linearScale(extent(xs), [pad, width - pad])
  const sy = linearScale(extent(ys), [height - pad, pad])
  return {
    width,
    height,
    toScreen: (x, y) => [sx(x), sy(y)],
  }
}

function polygonPoints(geom: MapGeometry, polygon: [number, number][]): string {
  return polygon
    .map(([x, y]) => geom.toScreen(x, y).map((v) => v.toFixed(1)).join(','))
    .join(' ')
}

export function renderStationMap(
  stations: StationsResponse,
  geom: MapGeometry,
  candidate?: { x_m: number; y_m: number } | null,
): string {
  const parts: string[] = []
  parts.push(
    `<polygon class="boundary" points="${polygonPoints(geom, stations.boundary)}" ` +
      `fill="#f4f6f8" stroke="#99a" stroke-width="1"/>`,
  )
  for (const s of stations.stations) {
    const [cx, cy] = geom.toScreen(s.x_m, s.y_m)
    const r = 2.5 + Math.sqrt(Math.max(s.supply_cars ?? 0, 0))
    parts.push(
      `<circle class="station" data-id="${s.station_id}" cx="${cx.toFixed(1)}" ` +
        `cy="${cy.toFixed(1)}" r="${r.toFixed(1)}" fill="#456" fill-opacity="0.75">` +
        `<title>${s.station_id}: ${s.supply_cars ?? '?'} cars, ` +
        `${s.demand_trips_per_month.toFixed(1)} trips/month</title></circle>`,
    )
  }
  if (candidate) {
    const [cx, cy] = geom.toScreen(candidate.x_m, candidate.y_m)
    parts.push(
      `<g class="candidate" transform="translate(${cx.toFixed(1)},${cy.toFixed(1)})">` +
        `<circle r="7" fill="none" stroke="#c22" stroke-width="2"/>` +
        `<circle r="1.8" fill="#c22"/></g>`,
    )
  }
  return parts.join('\n')
}

export function renderCurveChart(
  series: ChartSeries[],
  width = 420,
  height = 300,
  yExtent?: [number, number],
): string {
  if (series.length === 0) return '<text x="10" y="20">no curves</text>'
  const supplies = series[0].points.map((p) => p.supply)
  const allDemand = series.flatMap((s) => s.points.map((p) => p.demand))
  const [dLo, dHi] = yExtent ?? [Math.min(...allDemand, 0), Math.max(...allDemand)]
  const sx = linearScale(extent(supplies), [46, width - 12])
  const sy = linearScale([dLo, dHi], [height - 30, 12])
  const parts: string[] = []
  parts.push(
    `<line x1="46" y1="${height - 30}" x2="${width - 12}" y2="${height - 30}" stroke="#889"/>`,
    `<line x1="46" y1="12" x2="46" y2="${height - 30}" stroke="#889"/>`,
    `<text x="${width / 2}" y="${height - 6}" text-anchor="middle" class="axis">cars at station</text>`,
    `<text x="12" y="${height / 2}" transform="rotate(-90 12 ${height / 2})" ` +
      `text-anchor="middle" class="axis">trips/month</text>`,
  )
  series.forEach((s, i) => {
    const color = SERIES_COLORS[i % SERIES_COLORS.length]
    const path = s.points
      .map((p, j) => `${j === 0 ? 'M' : 'L'}${sx(p.supply).toFixed(1)},${sy(p.demand).toFixed(1)}`)
      .join(' ')
    parts.push(
      `<path class="curve" data-model="${s.model}" d="${path}" fill="none" ` +
        `stroke="${color}" stroke-width="2"/>`,
    )
    for (const p of s.points) {
      parts.push(
        `<circle class="pt" data-model="${s.model}" data-supply="${p.supply}" ` +
          `data-demand="${p.demand}" cx="${sx(p.supply).toFixed(1)}" ` +
          `cy="${sy(p.demand).toFixed(1)}" r="2.4" fill="${color}">` +
          `<title>${s.model}: ${p.supply} cars → ${p.demand.toFixed(2)} trips/month</title></circle>`,
      )
    }
    parts.push(
      `<text x="${width - 14}" y="${16 + 14 * i}" text-anchor="end" fill="${color}" ` +
        `class="legend" data-model="${s.model}">${s.model}</text>`,
    )
  })
  return parts.join('\n')
}

/** Figure-6-style side-by-side panels over a shared demand axis. */
export function renderScenarioPanels(panels: ScenarioPanel[], panelWidth = 320, height = 260): string {
  const yExtent = demandExtent(panels)
  return panels
    .map((panel, i) => {
      const chart = renderCurveChart(panel.series, panelWidth, height, yExtent)
      const nb = panel.neighborhood
      const note =
        nb.station_count > 0
          ? `3 km: ${nb.station_count} stations, Ø ${nb.mean_supply_cars?.toFixed(1)} cars, ` +
            `Ø ${nb.mean_demand_trips_per_month?.toFixed(1)} trips/month`
          : '3 km: no existing stations'
      return (
        `<g class="panel" data-label="${panel.label}" ` +
        `transform="translate(${i * (panelWidth + 16)},0)">` +
        `<text x="8" y="14" class="panel-title">${panel.label}` +
        `${panel.extrapolation ? ' ⚠ extrapolating' : ''}</text>` +
        `<g transform="translate(0,20)">${chart}</g>` +
        `<text x="8" y="${height + 38}" class="panel-note">${note}</text></g>`
      )
    })
    .join('\n')
}

export function renderChoropleth(
  layer: CoefficientLayer,
  stations: StationsResponse,
  geom: MapGeometry,
): string {
  const parts: string[] = []
  parts.push(
    `<polygon points="${polygonPoints(geom, stations.boundary)}" ` +
      `fill="none" stroke="#99a" stroke-width="1"/>`,
  )
  for (const cell of layer.cells) {
    parts.push(
      `<polygon class="cell" data-station="${cell.stationId}" ` +
        `data-value="${cell.value}" data-significant="${cell.significant}" ` +
        `points="${polygonPoints(geom, cell.polygon)}" ` +
        `fill="${cellColor(layer, cell)}" fill-opacity="${cellOpacity(cell)}" ` +
        `stroke="#fff" stroke-width="0.6"/>`,
    )
  }
  parts.push(
    `<text class="legend-min" x="8" y="16">${layer.legend.min.toPrecision(4)}</text>`,
    `<text class="legend-max" x="8" y="32">${layer.legend.max.toPrecision(4)}</text>`,
  )
  return parts.join('\n')
}

export function renderNeighborhoodPanel(panel: ScenarioPanel['neighborhood']): string {
  if (panel.station_count === 0) {
    return '<p class="nb">No existing stations within 3 km.</p>'
  }
  const largest = panel.largest_station
  return (
    `<p class="nb">Within 3 km: <b data-field="count">${panel.station_count}</b> stations, ` +
    `mean supply <b data-field="mean-supply">${panel.mean_supply_cars?.toFixed(2)}</b> cars, ` +
    `mean demand <b data-field="mean-demand">${panel.mean_demand_trips_per_month?.toFixed(2)}</b> trips/month.` +
    (largest
      ? ` Largest station ${largest.station_id}: ` +
        `<b data-field="largest-supply">${largest.supply_cars}</b> cars → ` +
        `<b data-field="largest-demand">${largest.demand_trips_per_month.toFixed(2)}</b> trips/month.`
      : '') +
    '</p>'
  )
}
