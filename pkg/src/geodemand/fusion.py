"""Raw-layer ingestion and data fusion into a model-ready FeatureTable.

Inputs are plain DataFrames with documented schemas (see the CSV layouts in
the README): stations, trips, POIs, census points, household-survey points.
The fusion procedure produces, per station: POI densities over Voronoi
cells, nearest-join household means, buffer-aggregated census attributes,
competitor counts, adaptive-radius household means, and the car supply.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .spatial import (
    EmptyBufferMeanError,
    GeodemandError,
    SpatialIndex,
    nearest_join,
)
from .table import FeatureTable
from .voronoi import VoronoiPartition, build_voronoi

DAYS_PER_MONTH = 30.4375  # fixed month length for trips/month targets

TRIP_COLUMNS = ("station_id", "start", "duration_h", "distance_km", "kind")
STATION_COLUMNS = ("station_id", "x_m", "y_m", "vehicles")


class ProjectionError(GeodemandError):
    pass


class UnknownStationError(GeodemandError):
    def __init__(self, offenders):
        self.offenders = list(offenders)
        super().__init__(f"trips reference unknown station ids: {self.offenders[:10]}")


@dataclass(frozen=True)
class FusionConfig:
    """Radii, thresholds, and category groupings for the fusion procedure."""

    buffer_radius_m: float = 750.0
    competitor_radius_m: float = 1000.0
    census_min_households: int = 10
    census_radius_step_m: float = 250.0
    max_trip_duration_h: float = 500.0
    min_trip_distance_km: float = 0.0  # exclusive lower bound
    max_trip_distance_km: float = 500.0  # inclusive upper bound
    poi_categories: dict = field(default_factory=dict)  # group -> raw labels
    census_agg: dict = field(default_factory=dict)  # attr -> "sum" | "mean"

    def __post_init__(self):
        for name in ("buffer_radius_m", "competitor_radius_m", "census_radius_step_m"):
            if getattr(self, name) <= 0:
                raise GeodemandError(f"{name} must be > 0")
        if self.min_trip_distance_km < 0:
            raise GeodemandError("min_trip_distance_km must be >= 0")

    def fingerprint(self) -> str:
        blob = json.dumps(
            {k: v for k, v in self.__dict__.items()}, sort_keys=True, default=str
        )
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def clean_trips(trips: pd.DataFrame, cfg: FusionConfig) -> tuple[pd.DataFrame, dict]:
    """Filter raw trips; returns (kept trips, removal counts per rule).

    Keeps trips with duration <= max_trip_duration_h, distance in
    (min, max] km, and kind == "return". Rules apply in that order, so the
    counts are sequential. Idempotent.
    """
    out = trips
    counts = {}
    keep = out["duration_h"] <= cfg.max_trip_duration_h
    counts["duration"] = int((~keep).sum())
    out = out[keep]
    keep = (out["distance_km"] > cfg.min_trip_distance_km) & (
        out["distance_km"] <= cfg.max_trip_distance_km
    )
    counts["distance"] = int((~keep).sum())
    out = out[keep]
    keep = out["kind"] == "return"
    counts["kind"] = int((~keep).sum())
    out = out[keep]
    return out.reset_index(drop=True), counts


def compute_demand(trips: pd.DataFrame, stations: pd.DataFrame, window) -> np.ndarray:
    """Average trips per month per station over the window (start, end).

    Month length is fixed at 30.4375 days. Stations with zero trips get 0.
    Trips referencing unknown station ids raise UnknownStationError.
    """
    start, end = (pd.Timestamp(window[0]), pd.Timestamp(window[1]))
    if end <= start:
        raise GeodemandError("window end must be after start")
    months = (end - start).total_seconds() / 86400.0 / DAYS_PER_MONTH
    known = set(stations["station_id"])
    offenders = sorted(set(trips["station_id"]) - known)
    if offenders:
        raise UnknownStationError(offenders)
    counts = trips.groupby("station_id").size()
    demand = np.array(
        [counts.get(sid, 0) / months for sid in stations["station_id"]], dtype=float
    )
    return demand


def _check_projected(name: str, xy: np.ndarray) -> None:
    # cheap guard against silently ingesting lon/lat degrees
    if len(xy) and np.all(np.abs(xy[:, 0]) <= 180.0) and np.all(np.abs(xy[:, 1]) <= 90.0):
        raise ProjectionError(
            f"{name} coordinates all fall inside |x|<=180, |y|<=90; "
            "input looks like lon/lat degrees but projected meters are required"
        )


def _points(df: pd.DataFrame) -> np.ndarray:
    return df[["x_m", "y_m"]].to_numpy(dtype=float)


def _attr_columns(df: pd.DataFrame) -> list[str]:
    return [c for c in df.columns if c not in ("x_m", "y_m", "category")]


def fuse_features(
    stations: pd.DataFrame,
    pois: pd.DataFrame,
    census: pd.DataFrame,
    households: pd.DataFrame,
    demand: np.ndarray,
    cfg: FusionConfig | None = None,
    boundary=None,
) -> FeatureTable:
    """Fuse raw layers into a FeatureTable, one row per station.

    Produced columns, with a provenance tag naming each aggregation rule:

    - ``voronoi_area_km2``, ``poi_density_<cat>_per_km2``: category counts
      inside the station's Voronoi cell divided by cell area;
    - ``census_<attr>``: sum (or mean, per ``cfg.census_agg``) of census
      points within ``buffer_radius_m``;
    - ``hh_nearest_<attr>``: attribute means over households whose nearest
      station is this one (falls back to the single nearest household when
      no household joins the station);
    - ``hh_radius_<attr>``: attribute means within ``competitor_radius_m``,
      growing by ``census_radius_step_m`` until ``census_min_households``
      households are captured;
    - ``competing_stations`` / ``competing_cars``: other stations and their
      cars within ``competitor_radius_m`` (closed buffer, self excluded);
    - ``supply_cars``: the station's own vehicle count.
    """
    cfg = cfg or FusionConfig()
    station_xy = _points(stations)
    for name, df in (("stations", stations), ("pois", pois),
                     ("census", census), ("households", households)):
        _check_projected(name, _points(df))
    if len(households) < cfg.census_min_households:
        raise GeodemandError(
            f"dataset holds {len(households)} households; "
            f"need at least census_min_households={cfg.census_min_households}"
        )
    n = len(stations)
    if len(demand) != n:
        raise GeodemandError("demand length must match station count")

    part = build_voronoi(station_xy, boundary=boundary)
    station_index = SpatialIndex(station_xy)

    columns: list[str] = []
    data: list[np.ndarray] = []
    units: dict[str, str] = {}
    prov: dict[str, str] = {}

    def add(name, values, unit, rule):
        columns.append(name)
        data.append(np.asarray(values, dtype=float))
        units[name] = unit
        prov[name] = rule

    add("voronoi_area_km2", part.areas_km2, "km2",
        "area of the station's boundary-clipped Voronoi cell")

    # (a) POI density per category over Voronoi cells
    groups = _poi_groups(pois, cfg)
    owner = part.membership(_points(pois)) if len(pois) else np.empty(0, dtype=int)
    for group, labels in groups.items():
        in_group = pois["category"].isin(labels).to_numpy() if len(pois) else np.empty(0, bool)
        counts = np.bincount(owner[(owner >= 0) & in_group], minlength=n)[:n]
        add(f"poi_density_{group}_per_km2", counts / part.areas_km2, "1/km2",
            f"count of {group} POIs in Voronoi cell / cell area")

    # (b) nearest-join household means
    hh_xy = _points(households)
    hh_attrs = _attr_columns(households)
    hh_owner = nearest_join(hh_xy, station_index)
    nearest_of_station = nearest_join(station_xy, SpatialIndex(hh_xy))
    for attr in hh_attrs:
        vals = households[attr].to_numpy(dtype=float)
        sums = np.bincount(hh_owner, weights=vals, minlength=n)[:n]
        cnts = np.bincount(hh_owner, minlength=n)[:n]
        means = np.where(cnts > 0, sums / np.maximum(cnts, 1), vals[nearest_of_station])
        add(f"hh_nearest_{attr}", means, "survey units",
            "mean over households nearest-joined to the station "
            "(nearest single household when none join)")

    # (c) census attributes in the fixed buffer
    census_xy = _points(census)
    census_index = SpatialIndex(census_xy) if len(census) else None
    for attr in _attr_columns(census):
        rule = cfg.census_agg.get(attr, "sum")
        vals = census[attr].to_numpy(dtype=float)
        out = np.empty(n)
        for i, p in enumerate(station_xy):
            ids = census_index.within(p, cfg.buffer_radius_m) if census_index else []
            if rule == "sum":
                out[i] = vals[ids].sum() if len(ids) else 0.0
            else:
                if len(ids) == 0:
                    raise EmptyBufferMeanError(p, cfg.buffer_radius_m)
                out[i] = vals[ids].mean()
        add(f"census_{attr}", out, "census units",
            f"{rule} of census points within {cfg.buffer_radius_m:.0f} m")

    # (d) competitors within the competitor radius, self excluded
    vehicles = stations["vehicles"].to_numpy(dtype=float)
    comp_stations = np.empty(n)
    comp_cars = np.empty(n)
    for i, p in enumerate(station_xy):
        ids = station_index.within(p, cfg.competitor_radius_m)
        others = ids[ids != i]
        comp_stations[i] = len(others)
        comp_cars[i] = vehicles[others].sum()
    add("competing_stations", comp_stations, "stations",
        f"other stations within {cfg.competitor_radius_m:.0f} m (closed)")
    add("competing_cars", comp_cars, "cars",
        f"cars at other stations within {cfg.competitor_radius_m:.0f} m (closed)")

    # (e) household means within a radius grown until enough households
    hh_index = SpatialIndex(hh_xy)
    radius_ids = []
    for p in station_xy:
        r = cfg.competitor_radius_m
        ids = hh_index.within(p, r)
        while len(ids) < cfg.census_min_households:
            r += cfg.census_radius_step_m
            ids = hh_index.within(p, r)
        radius_ids.append(ids)
    for attr in hh_attrs:
        vals = households[attr].to_numpy(dtype=float)
        means = np.array([vals[ids].mean() for ids in radius_ids])
        add(f"hh_radius_{attr}", means, "survey units",
            f"mean over households within {cfg.competitor_radius_m:.0f} m, radius grown by "
            f"{cfg.census_radius_step_m:.0f} m until >= {cfg.census_min_households} households")

    # (f) the station's own supply
    add("supply_cars", vehicles, "cars", "vehicle count from the station record")

    return FeatureTable(
        station_ids=stations["station_id"].to_numpy(),
        locations=station_xy,
        X=np.column_stack(data),
        columns=tuple(columns),
        y=np.asarray(demand, dtype=float),
        units=units,
        provenance=prov,
        metadata={
            "fusion_fingerprint": cfg.fingerprint(),
            "boundary_is_default": part.boundary_is_default,
            "boundary_vertices": part.boundary.tolist(),
        },
    )


def _poi_groups(pois: pd.DataFrame, cfg: FusionConfig) -> dict[str, list[str]]:
    if cfg.poi_categories:
        return {g: list(labels) for g, labels in sorted(cfg.poi_categories.items())}
    cats = sorted(pois["category"].unique()) if len(pois) else []
    return {c: [c] for c in cats}


def fuse_candidate(
    location,
    stations: pd.DataFrame,
    pois: pd.DataFrame,
    census: pd.DataFrame,
    households: pd.DataFrame,
    cfg: FusionConfig | None = None,
    boundary=None,
) -> dict[str, float]:
    """Fused feature values for a hypothetical station at `location`.

    Mirrors fuse_features for a single new row: the candidate's Voronoi cell
    is carved out of the existing partition, competitors are the existing
    stations, and ``supply_cars`` is left at 0 for the caller to override.
    """
    cfg = cfg or FusionConfig()
    loc = np.asarray(location, dtype=float)
    station_xy = _points(stations)
    aug = np.vstack([station_xy, loc[None, :]])
    if boundary is not None:
        from .geometry import point_in_polygon

        if not point_in_polygon(loc, np.asarray(boundary, dtype=float)):
            boundary = None  # fall back to a hull that contains the candidate
    part = build_voronoi(aug, boundary=boundary)
    cand = len(aug) - 1
    features: dict[str, float] = {"voronoi_area_km2": float(part.areas_km2[cand])}

    owner = part.membership(_points(pois)) if len(pois) else np.empty(0, dtype=int)
    for group, labels in _poi_groups(pois, cfg).items():
        in_group = pois["category"].isin(labels).to_numpy() if len(pois) else np.empty(0, bool)
        count = int(np.sum((owner == cand) & in_group))
        features[f"poi_density_{group}_per_km2"] = count / part.areas_km2[cand]

    hh_xy = _points(households)
    hh_attrs = _attr_columns(households)
    aug_index = SpatialIndex(aug)
    hh_owner = nearest_join(hh_xy, aug_index)
    mine = np.flatnonzero(hh_owner == cand)
    hh_index = SpatialIndex(hh_xy)
    if len(mine) == 0:
        mine = hh_index.knn(loc, 1)[0]
    for attr in hh_attrs:
        vals = households[attr].to_numpy(dtype=float)
        features[f"hh_nearest_{attr}"] = float(vals[mine].mean())

    census_xy = _points(census)
    census_index = SpatialIndex(census_xy) if len(census) else None
    for attr in _attr_columns(census):
        rule = cfg.census_agg.get(attr, "sum")
        vals = census[attr].to_numpy(dtype=float)
        ids = census_index.within(loc, cfg.buffer_radius_m) if census_index else []
        if rule == "sum":
            features[f"census_{attr}"] = float(vals[ids].sum()) if len(ids) else 0.0
        else:
            if len(ids) == 0:
                raise EmptyBufferMeanError(loc, cfg.buffer_radius_m)
            features[f"census_{attr}"] = float(vals[ids].mean())

    station_index = SpatialIndex(station_xy)
    ids = station_index.within(loc, cfg.competitor_radius_m)
    vehicles = stations["vehicles"].to_numpy(dtype=float)
    features["competing_stations"] = float(len(ids))
    features["competing_cars"] = float(vehicles[ids].sum())

    r = cfg.competitor_radius_m
    ids = hh_index.within(loc, r)
    while len(ids) < cfg.census_min_households:
        r += cfg.census_radius_step_m
        ids = hh_index.within(loc, r)
    for attr in hh_attrs:
        vals = households[attr].to_numpy(dtype=float)
        features[f"hh_radius_{attr}"] = float(vals[ids].mean())

    features["supply_cars"] = 0.0
    return features
