"""Station-indexed feature table: the universal model input.

Holds one row per station: projected location, named feature columns with
units, and the demand target (trips per month). Linear models consume the
standardized form; forests consume raw features. Persists as CSV plus a
JSON sidecar carrying units, provenance, and standardization parameters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .spatial import GeodemandError

TABLE_FORMAT_VERSION = 1
COORD_COLUMNS = ("x_m", "y_m")


class ZeroVarianceError(GeodemandError):
    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(f"zero-variance column(s): {self.columns}")


@dataclass(frozen=True)
class Standardization:
    """Per-column (mean, std) records for X and y; population-std convention."""

    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: float
    y_std: float

    def to_dict(self) -> dict:
        return {
            "x_mean": self.x_mean.tolist(),
            "x_std": self.x_std.tolist(),
            "y_mean": self.y_mean,
            "y_std": self.y_std,
        }

    @staticmethod
    def from_dict(d: dict) -> "Standardization":
        return Standardization(
            x_mean=np.asarray(d["x_mean"], dtype=float),
            x_std=np.asarray(d["x_std"], dtype=float),
            y_mean=float(d["y_mean"]),
            y_std=float(d["y_std"]),
        )


@dataclass(frozen=True)
class FeatureTable:
    """n stations x p named features plus target and projected coordinates."""

    station_ids: np.ndarray
    locations: np.ndarray
    X: np.ndarray
    columns: tuple[str, ...]
    y: np.ndarray
    units: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    y_name: str = "trips_per_month"
    standardization: Standardization | None = None
    uses_coordinates: bool = False
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        loc = np.asarray(self.locations, dtype=float)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "station_ids", np.asarray(self.station_ids))
        object.__setattr__(self, "columns", tuple(self.columns))
        n = len(y)
        if X.shape[0] != n or loc.shape != (n, 2) or len(self.station_ids) != n:
            raise GeodemandError(
                f"row mismatch: X {X.shape}, y {y.shape}, locations {loc.shape}"
            )
        if X.shape[1] != len(self.columns):
            raise GeodemandError(
                f"{X.shape[1]} feature columns but {len(self.columns)} names"
            )
        if len(set(self.columns)) != len(self.columns):
            raise GeodemandError("duplicate column names")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y)) and np.all(np.isfinite(loc))):
            raise GeodemandError("feature table contains missing or non-finite values")

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.columns.index(name)]

    def subset(self, rows) -> "FeatureTable":
        rows = np.asarray(rows)
        return replace(
            self,
            station_ids=self.station_ids[rows],
            locations=self.locations[rows],
            X=self.X[rows],
            y=self.y[rows],
        )

    def select(self, columns) -> "FeatureTable":
        idx = [self.columns.index(c) for c in columns]
        std = self.standardization
        if std is not None:
            std = Standardization(std.x_mean[idx], std.x_std[idx], std.y_mean, std.y_std)
        return replace(
            self,
            X=self.X[:, idx],
            columns=tuple(columns),
            units={c: self.units[c] for c in columns if c in self.units},
            provenance={c: self.provenance[c] for c in columns if c in self.provenance},
            standardization=std,
        )

    def with_coordinates(self) -> "FeatureTable":
        """Append the projected coordinates as ordinary feature columns."""
        if self.uses_coordinates:
            return self
        X = np.hstack([self.X, self.locations])
        cols = self.columns + COORD_COLUMNS
        units = dict(self.units, **{c: "m" for c in COORD_COLUMNS})
        prov = dict(self.provenance, **{c: "projected coordinate" for c in COORD_COLUMNS})
        return replace(self, X=X, columns=cols, units=units, provenance=prov,
                       uses_coordinates=True)

    def standardize(self) -> "FeatureTable":
        """Z-score X columns and y with population (n-denominator) std.

        Binary columns are standardized like any other. Raises
        ZeroVarianceError naming constant columns.
        """
        x_std = self.X.std(axis=0)
        y_std = float(self.y.std())
        dead = [c for c, s in zip(self.columns, x_std) if s <= 0]
        if y_std <= 0:
            dead.append(self.y_name)
        if dead:
            raise ZeroVarianceError(dead)
        x_mean = self.X.mean(axis=0)
        y_mean = float(self.y.mean())
        record = Standardization(x_mean=x_mean, x_std=x_std, y_mean=y_mean, y_std=y_std)
        return replace(
            self,
            X=(self.X - x_mean) / x_std,
            y=(self.y - y_mean) / y_std,
            standardization=record,
        )

    def destandardize(self) -> "FeatureTable":
        """Invert standardize(); no-op when no record is attached."""
        s = self.standardization
        if s is None:
            return self
        return replace(
            self,
            X=self.X * s.x_std + s.x_mean,
            y=self.y * s.y_std + s.y_mean,
            standardization=None,
        )

    def apply_standardization(self, record: Standardization) -> "FeatureTable":
        """Apply a training-time record to (raw) rows, e.g. held-out folds."""
        return replace(
            self,
            X=(self.X - record.x_mean) / record.x_std,
            y=(self.y - record.y_mean) / record.y_std,
            standardization=record,
        )

    # ---------------------------------------------------------------- I/O

    def to_csv(self, path) -> None:
        """Write `<path>` CSV and `<path stem>.meta.json` sidecar."""
        path = Path(path)
        df = pd.DataFrame({"station_id": self.station_ids,
                           "x_m": self.locations[:, 0],
                           "y_m": self.locations[:, 1]})
        for j, c in enumerate(self.columns):
            df[c] = self.X[:, j]
        df[self.y_name] = self.y
        df.to_csv(path, index=False)
        meta = {
            "format_version": TABLE_FORMAT_VERSION,
            "toolkit_version": __version__,
            "columns": list(self.columns),
            "units": self.units,
            "provenance": self.provenance,
            "y_name": self.y_name,
            "uses_coordinates": self.uses_coordinates,
            "standardization": self.standardization.to_dict() if self.standardization else None,
            "metadata": self.metadata,
        }
        sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True))

    @staticmethod
    def from_csv(path) -> "FeatureTable":
        path = Path(path)
        df = pd.read_csv(path)
        meta_file = sidecar_path(path)
        if meta_file.exists():
            meta = json.loads(meta_file.read_text())
            if meta.get("format_version") != TABLE_FORMAT_VERSION:
                raise GeodemandError(
                    f"unsupported feature-table format {meta.get('format_version')!r}"
                )
        else:
            meta = {}
        y_name = meta.get("y_name", "trips_per_month")
        reserved = {"station_id", "x_m", "y_m", y_name}
        columns = meta.get("columns") or [c for c in df.columns if c not in reserved]
        uses_coords = bool(meta.get("uses_coordinates", False))
        if uses_coords:
            # coordinate columns live in X as well; re-append from locations
            columns = [c for c in columns if c not in COORD_COLUMNS]
        std = meta.get("standardization")
        table = FeatureTable(
            station_ids=df["station_id"].to_numpy(),
            locations=df[["x_m", "y_m"]].to_numpy(dtype=float),
            X=df[columns].to_numpy(dtype=float),
            columns=tuple(columns),
            y=df[y_name].to_numpy(dtype=float),
            units=meta.get("units", {}),
            provenance=meta.get("provenance", {}),
            y_name=y_name,
            standardization=Standardization.from_dict(std) if std else None,
            metadata=meta.get("metadata", {}),
        )
        if uses_coords:
            x = df[[c for c in COORD_COLUMNS]].to_numpy(dtype=float)
            table = replace(table, X=np.hstack([table.X, x]),
                            columns=table.columns + COORD_COLUMNS, uses_coordinates=True)
        return table


def sidecar_path(csv_path) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_suffix(".meta.json")
