"""Versioned model persistence.

A bundle is a JSON document holding one fitted model: its kind, the
feature schema with units, standardization parameters, the fusion-config
fingerprint, the fitting configuration (so evaluation can refit per CV
fold), and the full payload needed for prediction. Loading and re-saving
reproduces the file byte for byte; format-version mismatches are rejected,
never guessed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .forest import ForestModel, ForestParams, GRFModel, Tree, grf_predict, rf_predict
from .linear import GWRFit, OLSFit, gwr_predict
from .mgwr import MGWRFit
from .pipeline import LINEAR_KINDS, FittedModel, ModelConfig
from .spatial import BandwidthSpec, GeodemandError, Kernel, SpatialIndex, UnfittedModelError
from .table import Standardization

BUNDLE_FORMAT_VERSION = 1


class BundleFormatError(GeodemandError):
    pass


class SchemaMismatchError(GeodemandError):
    pass


@dataclass(frozen=True)
class ModelBundle:
    kind: str
    state: FittedModel
    columns: tuple[str, ...]
    units: dict
    fusion_fingerprint: str | None
    created: str
    seed: int
    toolkit_version: str = __version__

    def predict_rows(self, rows: list[dict]) -> np.ndarray:
        """Predict from feature dicts; spatial kinds need x_m / y_m keys."""
        state = self.state
        needs_location = self.kind in ("gwr", "grf")
        feature_cols = list(state.model.columns) if self.kind in (
            "rf", "rf_coords") else list(self.columns)
        X = np.empty((len(rows), len(feature_cols)))
        locs = np.empty((len(rows), 2))
        for i, row in enumerate(rows):
            missing = [c for c in feature_cols if c not in row]
            if needs_location and ("x_m" not in row or "y_m" not in row):
                missing += [c for c in ("x_m", "y_m") if c not in row]
            if missing:
                raise SchemaMismatchError(
                    f"row {i} missing feature(s) {missing}; model expects "
                    f"{feature_cols}")
            X[i] = [float(row[c]) for c in feature_cols]
            if needs_location:
                locs[i] = (float(row["x_m"]), float(row["y_m"]))
        return self.predict_matrix(X, locs if needs_location else None,
                                   columns=tuple(feature_cols))

    def predict_matrix(self, X: np.ndarray, locations=None,
                       columns: tuple[str, ...] | None = None) -> np.ndarray:
        state = self.state
        kind = self.kind
        if kind == "mgwr":
            raise UnfittedModelError("MGWR does not support out-of-sample prediction")
        if kind in LINEAR_KINDS:
            rec = state.standardization
            Xs = (X - rec.x_mean) / rec.x_std
            if kind == "ols":
                yhat = state.model.predict(Xs)
            else:
                if locations is None:
                    raise SchemaMismatchError("GWR prediction needs locations")
                yhat = gwr_predict(state.model, locations, Xs)
            return yhat * rec.y_std + rec.y_mean
        if kind in ("rf", "rf_coords"):
            return rf_predict(state.model, X)
        if locations is None:
            raise SchemaMismatchError("GRF prediction needs locations")
        return grf_predict(state.model, locations, X)


def _std_to_dict(s: Standardization | None):
    return s.to_dict() if s is not None else None


def _config_to_dict(c: ModelConfig) -> dict:
    bw = None
    if c.bandwidth is not None:
        bw = {"mode": c.bandwidth.mode, "distance": c.bandwidth.distance,
              "k": c.bandwidth.k}
    return {
        "kind": c.kind, "kernel": str(Kernel(c.kernel).value), "mode": c.mode,
        "criterion": c.criterion, "bandwidth": bw,
        "forest": {"n_trees": c.forest.n_trees, "mtry": c.forest.mtry,
                   "min_leaf": c.forest.min_leaf, "max_depth": c.forest.max_depth,
                   "bootstrap": c.forest.bootstrap},
        "grf_k": c.grf_k, "select": c.select,
        "manual_include": list(c.manual_include),
        "manual_exclude": list(c.manual_exclude), "seed": c.seed,
    }


def _config_from_dict(d: dict) -> ModelConfig:
    bw = d.get("bandwidth")
    spec = None
    if bw is not None:
        spec = BandwidthSpec(mode=bw["mode"], distance=bw["distance"], k=bw["k"])
    f = d["forest"]
    return ModelConfig(kind=d["kind"], kernel=d["kernel"], mode=d["mode"],
                       criterion=d["criterion"], bandwidth=spec,
                       forest=ForestParams(n_trees=f["n_trees"], mtry=f["mtry"],
                                           min_leaf=f["min_leaf"],
                                           max_depth=f["max_depth"],
                                           bootstrap=f["bootstrap"]),
                       grf_k=d.get("grf_k"), select=d.get("select", False),
                       manual_include=tuple(d.get("manual_include", ())),
                       manual_exclude=tuple(d.get("manual_exclude", ())),
                       seed=d.get("seed", 0))


def _forest_to_dict(m: ForestModel) -> dict:
    return {
        "trees": [t.to_dict() for t in m.trees],
        "params": {"n_trees": m.params.n_trees, "mtry": m.params.mtry,
                   "min_leaf": m.params.min_leaf, "max_depth": m.params.max_depth,
                   "bootstrap": m.params.bootstrap},
        "seed": m.seed, "columns": list(m.columns),
        "uses_coordinates": m.uses_coordinates, "base_value": m.base_value,
        "y_range": list(m.y_range),
    }


def _forest_from_dict(d: dict) -> ForestModel:
    p = d["params"]
    return ForestModel(
        trees=[Tree.from_dict(t) for t in d["trees"]],
        params=ForestParams(n_trees=p["n_trees"], mtry=p["mtry"],
                            min_leaf=p["min_leaf"], max_depth=p["max_depth"],
                            bootstrap=p["bootstrap"]),
        seed=d["seed"], columns=tuple(d["columns"]),
        uses_coordinates=d["uses_coordinates"], base_value=d["base_value"],
        y_range=tuple(d["y_range"]))


def _payload(state: FittedModel) -> dict:
    kind = state.config.kind
    m = state.model
    if kind == "ols":
        return {"beta": m.beta.tolist(), "fitted": m.fitted.tolist(),
                "residuals": m.residuals.tolist(),
                "hat_diag": m.hat_diag.tolist(), "sigma_hat": m.sigma_hat,
                "trS": m.trS, "rss": m.rss, "n": m.n,
                "columns": list(m.columns)}
    if kind == "gwr":
        return {
            "kernel": str(m.kernel.value),
            "bandwidth": {"mode": m.bandwidth.mode,
                          "distance": m.bandwidth.distance, "k": m.bandwidth.k},
            "resolved_bw_m": m.resolved_bw_m.tolist(),
            "beta": m.beta.tolist(), "se": m.se.tolist(),
            "tvalues": m.tvalues.tolist(), "hat_diag": m.hat_diag.tolist(),
            "trS": m.trS, "fitted": m.fitted.tolist(),
            "residuals": m.residuals.tolist(), "sigma_hat": m.sigma_hat,
            "rss": m.rss, "columns": list(m.columns),
            "train_X": m.train_X.tolist(), "train_y": m.train_y.tolist(),
            "train_locations": m.train_locations.tolist(),
        }
    if kind == "mgwr":
        return {
            "kernel": str(m.kernel.value), "criterion": m.criterion,
            "bandwidths": m.bandwidths.tolist(),
            "resolved_median_km": m.resolved_median_km.tolist(),
            "beta": m.beta.tolist(), "fitted": m.fitted.tolist(),
            "residuals": m.residuals.tolist(), "rss": m.rss,
            "sigma_hat": m.sigma_hat,
            "enp": None if m.enp is None else m.enp.tolist(),
            "trS": m.trS,
            "hat_diag": None if m.hat_diag is None else m.hat_diag.tolist(),
            "se": None if m.se is None else m.se.tolist(),
            "tvalues": None if m.tvalues is None else m.tvalues.tolist(),
            "trace": [[int(i), float(s)] for i, s in m.trace],
            "converged": m.converged, "columns": list(m.columns),
        }
    if kind in ("rf", "rf_coords"):
        return _forest_to_dict(m)
    # grf
    return {
        "k": m.k, "seed": m.seed, "columns": list(m.columns),
        "locations": m.locations.tolist(),
        "params": {"n_trees": m.params.n_trees, "mtry": m.params.mtry,
                   "min_leaf": m.params.min_leaf, "max_depth": m.params.max_depth,
                   "bootstrap": m.params.bootstrap},
        "local_models": [_forest_to_dict(f) for f in m.local_models],
    }


def _model_from_payload(kind: str, d: dict):
    if kind == "ols":
        return OLSFit(beta=np.asarray(d["beta"]), fitted=np.asarray(d["fitted"]),
                      residuals=np.asarray(d["residuals"]),
                      hat_diag=np.asarray(d["hat_diag"]),
                      sigma_hat=d["sigma_hat"], trS=d["trS"], rss=d["rss"],
                      columns=tuple(d["columns"]), n=d["n"])
    if kind == "gwr":
        bw = d["bandwidth"]
        return GWRFit(
            kernel=Kernel(d["kernel"]),
            bandwidth=BandwidthSpec(mode=bw["mode"], distance=bw["distance"],
                                    k=bw["k"]),
            resolved_bw_m=np.asarray(d["resolved_bw_m"]),
            beta=np.asarray(d["beta"]), se=np.asarray(d["se"]),
            tvalues=np.asarray(d["tvalues"]), hat_diag=np.asarray(d["hat_diag"]),
            trS=d["trS"], fitted=np.asarray(d["fitted"]),
            residuals=np.asarray(d["residuals"]), sigma_hat=d["sigma_hat"],
            rss=d["rss"], columns=tuple(d["columns"]),
            train_X=np.asarray(d["train_X"]), train_y=np.asarray(d["train_y"]),
            train_locations=np.asarray(d["train_locations"]))
    if kind == "mgwr":
        opt = lambda v: None if v is None else np.asarray(v)
        return MGWRFit(
            kernel=Kernel(d["kernel"]), criterion=d["criterion"],
            bandwidths=np.asarray(d["bandwidths"], dtype=int),
            resolved_median_km=np.asarray(d["resolved_median_km"]),
            beta=np.asarray(d["beta"]), fitted=np.asarray(d["fitted"]),
            residuals=np.asarray(d["residuals"]), rss=d["rss"],
            sigma_hat=d["sigma_hat"], enp=opt(d["enp"]), trS=d["trS"],
            hat_diag=opt(d["hat_diag"]), se=opt(d["se"]),
            tvalues=opt(d["tvalues"]),
            trace=tuple((i, s) for i, s in d["trace"]),
            converged=d["converged"], columns=tuple(d["columns"]))
    if kind in ("rf", "rf_coords"):
        return _forest_from_dict(d)
    p = d["params"]
    return GRFModel(
        local_models=[_forest_from_dict(f) for f in d["local_models"]],
        locations=np.asarray(d["locations"]), k=d["k"],
        params=ForestParams(n_trees=p["n_trees"], mtry=p["mtry"],
                            min_leaf=p["min_leaf"], max_depth=p["max_depth"],
                            bootstrap=p["bootstrap"]),
        seed=d["seed"], columns=tuple(d["columns"]))


def bundle_from_state(state: FittedModel, units: dict | None = None,
                      fusion_fingerprint: str | None = None,
                      created: str | None = None) -> ModelBundle:
    created = created or datetime.now(timezone.utc).isoformat(timespec="seconds")
    return ModelBundle(kind=state.config.kind, state=state,
                       columns=state.columns,
                       units=units or {},
                       fusion_fingerprint=fusion_fingerprint,
                       created=created, seed=state.config.seed)


def save_bundle(bundle: ModelBundle, path) -> None:
    doc = {
        "format_version": BUNDLE_FORMAT_VERSION,
        "toolkit_version": bundle.toolkit_version,
        "kind": bundle.kind,
        "created": bundle.created,
        "seed": bundle.seed,
        "columns": list(bundle.columns),
        "units": bundle.units,
        "fusion_fingerprint": bundle.fusion_fingerprint,
        "config": _config_to_dict(bundle.state.config),
        "standardization": _std_to_dict(bundle.state.standardization),
        "info": _jsonable(bundle.state.info),
        "payload": _payload(bundle.state),
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True,
                                     separators=(",", ":")))


def load_bundle(path) -> ModelBundle:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    doc = json.loads(path.read_text())
    version = doc.get("format_version")
    if version != BUNDLE_FORMAT_VERSION:
        raise BundleFormatError(
            f"bundle format {version!r} not supported (expected "
            f"{BUNDLE_FORMAT_VERSION}); refusing to guess")
    config = _config_from_dict(doc["config"])
    std = doc.get("standardization")
    bw = config.bandwidth
    if config.kind == "gwr" and doc["payload"].get("bandwidth"):
        b = doc["payload"]["bandwidth"]
        bw = BandwidthSpec(mode=b["mode"], distance=b["distance"], k=b["k"])
    state = FittedModel(
        config=config, columns=tuple(doc["columns"]),
        model=_model_from_payload(doc["kind"], doc["payload"]),
        standardization=Standardization.from_dict(std) if std else None,
        bandwidth=bw, info=doc.get("info", {}))
    return ModelBundle(kind=doc["kind"], state=state,
                       columns=tuple(doc["columns"]), units=doc.get("units", {}),
                       fusion_fingerprint=doc.get("fusion_fingerprint"),
                       created=doc["created"], seed=doc.get("seed", 0),
                       toolkit_version=doc.get("toolkit_version", ""))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj
