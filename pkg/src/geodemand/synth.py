"""Synthetic datasets with known coefficient surfaces.

The real station data is proprietary, so tests and demos run on generated
layouts: y_i = sum_j beta_j(u_i, v_i) x_ij + intercept(u_i, v_i) + eps_i
with per-feature surfaces that are constant, linear in space, or step
functions. Everything is deterministic given the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .spatial import GeodemandError
from .table import FeatureTable

# offset keeps synthetic coordinates out of the lon/lat sanity box
ORIGIN = (2_600_000.0, 1_200_000.0)


@dataclass(frozen=True)
class Surface:
    """A coefficient surface beta(u, v) over projected coordinates."""

    kind: str  # "constant" | "linear" | "step"
    value: float = 0.0
    low: float = 0.0
    high: float = 0.0
    axis: str = "x"
    threshold: float = 0.0
    gradient: tuple[float, float] = (0.0, 0.0)

    def __call__(self, locations: np.ndarray) -> np.ndarray:
        u = locations[:, 0] - ORIGIN[0]
        v = locations[:, 1] - ORIGIN[1]
        if self.kind == "constant":
            return np.full(len(locations), self.value)
        if self.kind == "linear":
            return self.value + self.gradient[0] * u + self.gradient[1] * v
        if self.kind == "step":
            coord = u if self.axis == "x" else v
            return np.where(coord < self.threshold, self.low, self.high)
        raise GeodemandError(f"unknown surface kind {self.kind!r}")

    @staticmethod
    def constant(value: float) -> "Surface":
        return Surface(kind="constant", value=value)

    @staticmethod
    def step(axis: str, threshold: float, low: float, high: float) -> "Surface":
        return Surface(kind="step", axis=axis, threshold=threshold, low=low, high=high)

    @staticmethod
    def linear(value: float, gx: float, gy: float) -> "Surface":
        return Surface(kind="linear", value=value, gradient=(gx, gy))


@dataclass(frozen=True)
class SynthSpec:
    """Generator configuration: layout, surfaces, and noise level."""

    n: int
    surfaces: tuple[Surface, ...]
    sigma: float = 0.1
    layout: str = "uniform"  # "uniform" | "clustered"
    extent_m: float = 100_000.0
    cluster_centers: tuple[tuple[float, float], ...] = ()
    cluster_spread_m: float = 8_000.0
    intercept: Surface = field(default_factory=lambda: Surface.constant(0.0))

    def __post_init__(self):
        if self.sigma < 0:
            raise GeodemandError("sigma must be >= 0")
        if self.n < len(self.surfaces) + 2:
            raise GeodemandError(
                f"n={self.n} too small for p={len(self.surfaces)} features"
            )


@dataclass(frozen=True)
class SynthTruth:
    """Evaluated ground-truth surfaces for the generated rows."""

    beta: np.ndarray  # (n, p)
    intercept: np.ndarray  # (n,)
    sigma: float
    surfaces: tuple[Surface, ...]


def _locations(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    if spec.layout == "uniform":
        xy = rng.uniform(0.0, spec.extent_m, size=(spec.n, 2))
    elif spec.layout == "clustered":
        centers = np.asarray(
            spec.cluster_centers
            or ((0.25 * spec.extent_m, 0.5 * spec.extent_m),
                (0.75 * spec.extent_m, 0.5 * spec.extent_m))
        )
        pick = rng.integers(0, len(centers), size=spec.n)
        xy = centers[pick] + rng.normal(0.0, spec.cluster_spread_m, size=(spec.n, 2))
    else:
        raise GeodemandError(f"unknown layout {spec.layout!r}")
    return xy + np.asarray(ORIGIN)


def synth_generate(spec: SynthSpec, seed: int) -> tuple[FeatureTable, SynthTruth]:
    """Generate a FeatureTable plus the coefficient surfaces that produced it."""
    rng = np.random.default_rng(seed)
    locations = _locations(spec, rng)
    p = len(spec.surfaces)
    X = rng.normal(0.0, 1.0, size=(spec.n, p))
    beta = np.column_stack([s(locations) for s in spec.surfaces]) if p else np.empty((spec.n, 0))
    intercept = spec.intercept(locations)
    noise = rng.normal(0.0, spec.sigma, size=spec.n) if spec.sigma > 0 else np.zeros(spec.n)
    y = (X * beta).sum(axis=1) + intercept + noise
    columns = tuple(f"f{j + 1}" for j in range(p))
    table = FeatureTable(
        station_ids=np.arange(spec.n),
        locations=locations,
        X=X,
        columns=columns,
        y=y,
        units={c: "z" for c in columns},
        provenance={c: "synthetic standard-normal feature" for c in columns},
        metadata={"generator": "synth_generate", "seed": seed, "sigma": spec.sigma},
    )
    return table, SynthTruth(beta=beta, intercept=intercept, sigma=spec.sigma,
                             surfaces=spec.surfaces)


# ------------------------------------------------------------------ presets

def preset_two_cluster(n: int = 800, sigma: float = 0.1, n_nuisance: int = 2) -> SynthSpec:
    """Two station clusters 100 km apart; the first feature's coefficient is
    +2 in the west cluster and -1 in the east, nuisance features constant.
    The baseline (intercept) also steps across clusters so a pooled global
    fit leaves spatially clustered residuals."""
    extent = 200_000.0
    surfaces = [Surface.step("x", extent / 2, low=2.0, high=-1.0)]
    surfaces += [Surface.constant(0.5 * (j + 1)) for j in range(n_nuisance)]
    return SynthSpec(
        n=n,
        surfaces=tuple(surfaces),
        sigma=sigma,
        layout="clustered",
        extent_m=extent,
        cluster_centers=((50_000.0, 100_000.0), (150_000.0, 100_000.0)),
        cluster_spread_m=10_000.0,
        intercept=Surface.step("x", extent / 2, low=1.0, high=-1.0),
    )


def preset_multiscale(n: int = 600, sigma: float = 0.1) -> SynthSpec:
    """One step-surface feature among three constant-surface features."""
    extent = 100_000.0
    surfaces = (
        Surface.step("x", extent / 2, low=2.0, high=-1.0),
        Surface.constant(1.0),
        Surface.constant(-0.8),
        Surface.constant(0.6),
    )
    return SynthSpec(n=n, surfaces=surfaces, sigma=sigma, layout="uniform",
                     extent_m=extent)


def preset_uniform(n: int = 500, p: int = 5, sigma: float = 0.1) -> SynthSpec:
    """Plain global linear model: constant surfaces, uniform layout."""
    surfaces = tuple(Surface.constant(((-1.0) ** j) * (1.0 + 0.5 * j)) for j in range(p))
    return SynthSpec(n=n, surfaces=surfaces, sigma=sigma, layout="uniform")


def synth_saturating_supply(
    n: int = 1000,
    seed: int = 0,
    max_supply: int = 20,
    scale: float = 80.0,
    knee: float = 4.0,
    sigma: float = 0.0,
) -> FeatureTable:
    """Supply-response dataset where demand saturates in the car supply.

    y = scale * (1 - exp(-supply / knee)) + 0.1 * f1 + eps, supply drawn
    uniformly from 1..max_supply. The saturation knee sits near `knee` cars.
    """
    rng = np.random.default_rng(seed)
    locations = rng.uniform(0.0, 50_000.0, size=(n, 2)) + np.asarray(ORIGIN)
    supply = rng.integers(1, max_supply + 1, size=n).astype(float)
    f1 = rng.normal(0.0, 1.0, size=n)
    noise = rng.normal(0.0, sigma, size=n) if sigma > 0 else np.zeros(n)
    y = scale * (1.0 - np.exp(-supply / knee)) + 0.1 * f1 + noise
    return FeatureTable(
        station_ids=np.arange(n),
        locations=locations,
        X=np.column_stack([supply, f1]),
        columns=("supply_cars", "f1"),
        y=y,
        units={"supply_cars": "cars", "f1": "z"},
        provenance={"supply_cars": "synthetic vehicle supply",
                    "f1": "synthetic standard-normal feature"},
        metadata={"generator": "synth_saturating_supply", "seed": seed,
                  "knee_cars": knee, "scale": scale},
    )


def synth_raw_layout(
    n_stations: int = 60,
    seed: int = 0,
    extent_m: float = 40_000.0,
    n_pois: int = 400,
    n_census: int = 500,
    n_households: int = 300,
    trip_rate_per_car: float = 25.0,
    window=("2019-01-01", "2020-02-26"),
) -> dict:
    """Raw CSV-shaped layers (stations, trips, pois, census, households).

    Used to exercise the full fuse pipeline; every layer is deterministic
    given the seed. Returns a dict of DataFrames plus the demand window.
    """
    rng = np.random.default_rng(seed)
    ox, oy = ORIGIN

    def scatter(n):
        return rng.uniform(0.0, extent_m, size=(n, 2)) + np.array([ox, oy])

    # a share of stations clusters in "town centers" so competitor radii
    # overlap; the rest spreads uniformly
    n_town = max(4, n_stations // 4)
    centers = scatter(max(2, n_town // 4))
    picks = rng.integers(0, len(centers), size=n_town)
    town_xy = centers[picks] + rng.normal(0.0, 400.0, size=(n_town, 2))
    station_xy = np.vstack([town_xy, scatter(n_stations - n_town)])
    vehicles = rng.integers(1, 8, size=n_stations)
    stations = pd.DataFrame({
        "station_id": [f"S{i:04d}" for i in range(n_stations)],
        "x_m": station_xy[:, 0],
        "y_m": station_xy[:, 1],
        "vehicles": vehicles,
    })

    start, end = pd.Timestamp(window[0]), pd.Timestamp(window[1])
    span_s = (end - start).total_seconds()
    rows = []
    for i in range(n_stations):
        lam = trip_rate_per_car * vehicles[i] * span_s / 86400.0 / 30.4375
        n_trips = int(rng.poisson(lam))
        offsets = rng.uniform(0.0, span_s, size=n_trips)
        durations = rng.exponential(6.0, size=n_trips)
        distances = rng.exponential(30.0, size=n_trips)
        kinds = rng.choice(["return", "one_way", "other"], size=n_trips,
                           p=[0.95, 0.04, 0.01])
        # sprinkle filter-violating records so cleaning has work to do
        if n_trips > 4:
            durations[0] = 640.0
            distances[1] = 0.0
            distances[2] = 900.0
        for t in range(n_trips):
            rows.append((f"S{i:04d}", start + pd.Timedelta(seconds=float(offsets[t])),
                         float(durations[t]), float(distances[t]), kinds[t]))
    trips = pd.DataFrame(rows, columns=["station_id", "start", "duration_h",
                                        "distance_km", "kind"])

    poi_xy = scatter(n_pois)
    pois = pd.DataFrame({
        "x_m": poi_xy[:, 0],
        "y_m": poi_xy[:, 1],
        "category": rng.choice(
            ["public", "health", "leisure", "food", "accommodation", "shopping"],
            size=n_pois),
    })

    census_xy = scatter(n_census)
    census = pd.DataFrame({
        "x_m": census_xy[:, 0],
        "y_m": census_xy[:, 1],
        "population": rng.integers(5, 400, size=n_census).astype(float),
        "jobs": rng.integers(0, 250, size=n_census).astype(float),
    })

    hh_xy = scatter(n_households)
    households = pd.DataFrame({
        "x_m": hh_xy[:, 0],
        "y_m": hh_xy[:, 1],
        "income": rng.normal(5.5, 0.5, size=n_households),
        "cars_per_household": np.abs(rng.normal(1.0, 0.35, size=n_households)),
    })

    return {
        "stations": stations,
        "trips": trips,
        "pois": pois,
        "census": census,
        "households": households,
        "window": (start, end),
    }
