/** Wire types for the /v1 JSON API and the coefficient-export CSV. */

export interface Station {
  station_id: string
  x_m: number
  y_m: number
  supply_cars: number | null
  demand_trips_per_month: number
  voronoi_cell: [number, number][]
}

export interface StationsResponse {
  stations: Station[]
  boundary: [number, number][]
}

export interface HealthResponse {
  status: string
  toolkit_version: string
  models: Record<string, string>
  n_stations: number
}

export interface WhatIfRequest {
  x_m: number
  y_m: number
  supply_min: number
  supply_max: number
  models?: string[]
  mode?: 'auto_fuse' | 'fixed_features'
  base_features?: Record<string, number>
}

export interface WhatIfCurve {
  model: string
  kind: string
  supply_cars: number[]
  demand_trips_per_month: number[]
}

export interface NeighborhoodStats {
  station_count: number
  mean_supply_cars: number | null
  mean_demand_trips_per_month: number | null
  largest_station: {
    station_id: string
    supply_cars: number
    demand_trips_per_month: number
  } | null
}

export interface WhatIfResponse {
  location: { x_m: number; y_m: number }
  mode: string
  extrapolation_warning: boolean
  fusion_fingerprint: string | null
  base_features: Record<string, number>
  curves: WhatIfCurve[]
  neighborhood_3km: NeighborhoodStats
}

/** One row of the coefficient-export CSV (per station and feature). */
export interface CoefficientRow {
  station_id: string
  x_m: number
  y_m: number
  feature: string
  beta: number
  se: number
  t: number
  significant: boolean
}
