/** Page wiring: map clicks issue /v1/whatif requests (latest wins), the
 * chart and neighborhood panel render the response, pins build the
 * side-by-side comparison, and the coefficient tab renders choropleths
 * from an uploaded export CSV. */

import { ApiClient, ApiError } from './api.js'
import { buildCoefficientLayer, UnknownFeatureError } from './choropleth.js'
import { parseCoefficients, coefficientFeatures } from './csv.js'
import { toPanels, toSeries } from './curves.js'
import {
  mapGeometry,
  renderChoropleth,
  renderCurveChart,
  renderNeighborhoodPanel,
  renderScenarioPanels,
  renderStationMap,
  type MapGeometry,
} from './render.js'
import { SessionState } from './state.js'
import type { CoefficientRow, StationsResponse, WhatIfRequest } from './types.js'

const api = new ApiClient('')
const state = new SessionState(window.localStorage)

let stations: StationsResponse | null = null
let geom: MapGeometry | null = null
const coefRowsByModel: Record<string, CoefficientRow[]> = {}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id)
  if (!node) throw new Error(`missing element #${id}`)
  return node as T
}

function setStatus(text: string, isError = false, retry?: () => void): void {
  const box = el<HTMLDivElement>('status')
  box.textContent = text
  box.className = isError ? 'status error' : 'status'
  if (retry) {
    const btn = document.createElement('button')
    btn.textContent = 'retry'
    btn.onclick = retry
    box.append(' ', btn)
  }
}

function drawMap(): void {
  if (!stations || !geom) return
  el<HTMLElement>('map-layer').innerHTML = renderStationMap(
    stations,
    geom,
    state.candidate,
  )
}

function drawResponse(): void {
  const response = state.lastResponse
  if (!response) return
  el<HTMLElement>('chart-layer').innerHTML = renderCurveChart(toSeries(response))
  el<HTMLDivElement>('neighborhood').innerHTML = renderNeighborhoodPanel(
    response.neighborhood_3km,
  )
  el<HTMLDivElement>('warning').textContent = response.extrapolation_warning
    ? '⚠ candidate lies outside the station hull; predictions extrapolate'
    : ''
}

function drawPins(): void {
  const panels = toPanels(
    state.pins.map((p) => ({ label: p.label, response: p.response })),
  )
  el<HTMLElement>('pins-layer').innerHTML = renderScenarioPanels(panels)
  const svg = el<HTMLElement>('pins-svg')
  svg.setAttribute('width', String(panels.length * 336))
  el<HTMLButtonElement>('pin-btn').disabled =
    !state.lastResponse || state.pins.length >= 10
}

async function issueWhatIf(): Promise<void> {
  const candidate = state.candidate
  if (!candidate) return
  const token = state.beginRequest()
  const request: WhatIfRequest = {
    x_m: candidate.x_m,
    y_m: candidate.y_m,
    supply_min: state.supplyMin,
    supply_max: state.supplyMax,
    mode: 'auto_fuse',
  }
  setStatus('querying models…')
  try {
    const response = await api.whatif(request)
    if (state.acceptResponse(token, response)) {
      setStatus(`ok (${response.curves.length} models)`)
      drawResponse()
      drawPins()
    }
  } catch (e) {
    const detail = e instanceof ApiError ? `${e.status}: ${e.message}` : String(e)
    setStatus(`what-if failed — ${detail}`, true, () => void issueWhatIf())
  }
}

function onMapClick(event: MouseEvent): void {
  if (!stations || !geom) return
  const svg = el<HTMLElement>('map-svg') as unknown as SVGSVGElement
  const rect = svg.getBoundingClientRect()
  const px = ((event.clientX - rect.left) / rect.width) * geom.width
  const py = ((event.clientY - rect.top) / rect.height) * geom.height
  // invert the screen transform through two reference points
  const [x0, y0] = geom.toScreen(0, 0)
  const [x1, y1] = geom.toScreen(1, 1)
  const x_m = (px - x0) / (x1 - x0)
  const y_m = (py - y0) / (y1 - y0)
  state.placeCandidate({ x_m, y_m })
  drawMap()
  void issueWhatIf()
}

function onCoefficientRender(): void {
  const model = el<HTMLSelectElement>('coef-model').value
  const feature = el<HTMLSelectElement>('coef-feature').value
  const rows = coefRowsByModel[model]
  const box = el<HTMLDivElement>('coef-message')
  if (!rows || !stations || !geom) {
    box.textContent = 'load a coefficient export CSV first'
    return
  }
  try {
    const layer = buildCoefficientLayer(rows, stations, feature)
    el<HTMLElement>('coef-layer').innerHTML = renderChoropleth(layer, stations, geom)
    box.textContent = `${layer.feature}: legend ${layer.legend.min.toPrecision(3)} … ${layer.legend.max.toPrecision(3)}; faded cells are not significant at the adjusted α`
  } catch (e) {
    box.textContent = e instanceof UnknownFeatureError ? e.message : String(e)
  }
}

function onCoefficientUpload(event: Event): void {
  const input = event.target as HTMLInputElement
  const file = input.files?.[0]
  if (!file) return
  const model = el<HTMLSelectElement>('coef-model').value
  void file.text().then((text) => {
    const rows = parseCoefficients(text)
    coefRowsByModel[model] = rows
    const select = el<HTMLSelectElement>('coef-feature')
    select.innerHTML = coefficientFeatures(rows)
      .map((f) => `<option value="${f}">${f}</option>`)
      .join('')
    onCoefficientRender()
  })
}

async function boot(): Promise<void> {
  try {
    const health = await api.health()
    setStatus(`connected: ${Object.keys(health.models).join(', ')}`)
    stations = await api.stations()
    geom = mapGeometry(stations)
    drawMap()
    drawPins()
  } catch (e) {
    setStatus(`cannot reach service — ${String(e)}`, true, () => void boot())
  }
}

el<HTMLElement>('map-svg').addEventListener('click', (e) =>
  onMapClick(e as MouseEvent),
)
el<HTMLInputElement>('supply-max').addEventListener('change', (e) => {
  state.supplyMax = Number((e.target as HTMLInputElement).value)
  el<HTMLSpanElement>('supply-max-label').textContent = String(state.supplyMax)
  void issueWhatIf()
})
el<HTMLButtonElement>('pin-btn').addEventListener('click', () => {
  const n = state.pins.length + 1
  state.pin(`scenario ${n}`)
  drawPins()
})
el<HTMLInputElement>('coef-file').addEventListener('change', onCoefficientUpload)
el<HTMLSelectElement>('coef-feature').addEventListener('change', onCoefficientRender)
el<HTMLSelectElement>('coef-model').addEventListener('change', onCoefficientRender)

void boot()
