"""Supply what-if curves for candidate station locations.

Given fitted model bundles and a location, predict demand while sweeping
the vehicle supply over a range, and summarize the 3 km neighborhood of
existing stations (mean supply, mean demand, largest station). Runs
entirely as library calls; the HTTP service is a thin wrapper.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bundle import ModelBundle
from .geometry import convex_hull, point_in_polygon
from .spatial import GeodemandError, SpatialIndex, UnfittedModelError
from .table import FeatureTable

NEIGHBORHOOD_RADIUS_M = 3000.0  # closed (<=) neighborhood


@dataclass(frozen=True)
class NeighborhoodStats:
    station_count: int
    mean_supply_cars: float | None
    mean_demand_trips_per_month: float | None
    largest_station: dict | None  # station_id, supply_cars, demand


@dataclass(frozen=True)
class WhatIfCurve:
    model: str
    kind: str
    supply_cars: tuple[int, ...]
    demand_trips_per_month: tuple[float, ...]


@dataclass(frozen=True)
class WhatIfResult:
    location: tuple[float, float]
    curves: tuple[WhatIfCurve, ...]
    neighborhood_3km: NeighborhoodStats
    base_features: dict
    mode: str
    extrapolation_warning: bool
    fusion_fingerprint: str | None = None


def neighborhood_stats(table: FeatureTable, location,
                       radius: float = NEIGHBORHOOD_RADIUS_M) -> NeighborhoodStats:
    """Existing-station statistics within the closed radius around the
    candidate; the hypothetical station itself is not part of the table."""
    idx = SpatialIndex(table.locations)
    ids = idx.within(np.asarray(location, dtype=float), radius)
    if len(ids) == 0:
        return NeighborhoodStats(station_count=0, mean_supply_cars=None,
                                 mean_demand_trips_per_month=None,
                                 largest_station=None)
    supply = (table.column("supply_cars")[ids]
              if "supply_cars" in table.columns else np.zeros(len(ids)))
    demand = table.y[ids]
    # largest by supply, ties -> lowest station index
    big = int(np.lexsort((ids, -supply))[0])
    return NeighborhoodStats(
        station_count=int(len(ids)),
        mean_supply_cars=float(supply.mean()),
        mean_demand_trips_per_month=float(demand.mean()),
        largest_station={
            "station_id": str(table.station_ids[ids[big]]),
            "supply_cars": float(supply[big]),
            "demand_trips_per_month": float(demand[big]),
        })


def outside_hull(table: FeatureTable, location) -> bool:
    hull = convex_hull(table.locations)
    return not point_in_polygon(np.asarray(location, dtype=float), hull)


def whatif_curves(bundles: dict[str, ModelBundle], location, base_features: dict,
                  supply_values, table: FeatureTable,
                  mode: str = "fixed_features") -> WhatIfResult:
    """Demand-vs-supply curves for each requested model bundle.

    `base_features` holds every non-supply feature value at the candidate
    location (from fuse_candidate in auto-fuse mode, or caller-provided);
    ``supply_cars`` is overridden across `supply_values`.
    """
    location = tuple(float(v) for v in np.asarray(location, dtype=float))
    supply_values = [int(v) for v in supply_values]
    if not supply_values:
        raise GeodemandError("empty supply range")
    curves = []
    fingerprint = None
    for name, bundle in bundles.items():
        if bundle.kind == "mgwr":
            raise UnfittedModelError(
                "MGWR does not support out-of-sample prediction; it cannot "
                "appear in a what-if request")
        rows = []
        for v in supply_values:
            row = dict(base_features)
            row["supply_cars"] = float(v)
            row["x_m"], row["y_m"] = location
            rows.append(row)
        pred = bundle.predict_rows(rows)
        curves.append(WhatIfCurve(model=name, kind=bundle.kind,
                                  supply_cars=tuple(supply_values),
                                  demand_trips_per_month=tuple(float(p) for p in pred)))
        fingerprint = fingerprint or bundle.fusion_fingerprint
    return WhatIfResult(
        location=location,
        curves=tuple(curves),
        neighborhood_3km=neighborhood_stats(table, location),
        base_features=dict(base_features),
        mode=mode,
        extrapolation_warning=outside_hull(table, location),
        fusion_fingerprint=fingerprint,
    )
