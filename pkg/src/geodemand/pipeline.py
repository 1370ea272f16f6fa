"""Model pipelines: a uniform fit/predict surface over every model kind.

A pipeline bundles per-fold feature selection, standardization (linear
models only; forests consume raw features), bandwidth tuning, and fitting,
so cross-validation never leaks held-out rows into selection or tuning.
Predictions always come back in original target units.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .forest import ForestParams, GRFModel, ForestModel, grf_fit, grf_predict, rf_fit, rf_predict
from .linear import GWRFit, OLSFit, gwr_fit, gwr_predict, ols_fit, select_bandwidth
from .mgwr import MGWRFit, mgwr_fit
from .selection import lasso_select
from .spatial import BandwidthSpec, GeodemandError, Kernel, UnfittedModelError
from .table import FeatureTable, Standardization

MODEL_KINDS = ("ols", "gwr", "mgwr", "rf", "rf_coords", "grf")
LINEAR_KINDS = ("ols", "gwr", "mgwr")


@dataclass(frozen=True)
class ModelConfig:
    """Everything needed to (re)fit one model kind on a feature table."""

    kind: str
    kernel: str = "exponential"
    mode: str = "fixed"  # bandwidth mode for gwr
    criterion: str = "aicc"
    bandwidth: BandwidthSpec | None = None  # None -> golden-section search
    forest: ForestParams = field(default_factory=ForestParams)
    grf_k: int | None = None  # default ceil(n / 4)
    select: bool = False
    manual_include: tuple[str, ...] = ()
    manual_exclude: tuple[str, ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise GeodemandError(f"unknown model kind {self.kind!r}")


@dataclass(frozen=True)
class FittedModel:
    config: ModelConfig
    columns: tuple[str, ...]
    model: object  # OLSFit | GWRFit | MGWRFit | ForestModel | GRFModel
    standardization: Standardization | None
    bandwidth: BandwidthSpec | None
    info: dict = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return self.config.kind


class ModelPipeline:
    """fit/predict wrapper used by kfold_cv, evaluate, ablate, and the CLI."""

    def __init__(self, config: ModelConfig):
        self.config = config

    def fit(self, train: FeatureTable) -> FittedModel:
        cfg = self.config
        columns = train.columns
        info: dict = {}
        if cfg.select:
            sel = lasso_select(train.standardize(), seed=cfg.seed,
                               manual_include=cfg.manual_include,
                               manual_exclude=cfg.manual_exclude)
            columns = sel.selected
            info["selected"] = columns
            info["lambda"] = sel.lam
        sub = train.select(columns)

        if cfg.kind in LINEAR_KINDS:
            dead = [c for c, s in zip(sub.columns, sub.X.std(axis=0)) if s <= 0]
            if dead:
                warnings.warn(f"dropping zero-variance column(s) {dead} "
                              "before standardizing")
                columns = tuple(c for c in columns if c not in dead)
                info["dropped_constant"] = dead
                sub = train.select(columns)
            std = sub.standardize()
            if cfg.kind == "ols":
                model: object = ols_fit(std)
                bw = None
            elif cfg.kind == "gwr":
                bw = cfg.bandwidth
                if bw is None:
                    search = select_bandwidth(std, cfg.kernel, cfg.mode,
                                              cfg.criterion)
                    bw = search.spec
                    info["bandwidth_score"] = search.score
                model = gwr_fit(std, cfg.kernel, bw)
                info["bandwidth"] = (bw.distance if bw.mode == "fixed" else bw.k)
            else:  # mgwr
                model = mgwr_fit(std, cfg.kernel, cfg.criterion)
                bw = None
                info["bandwidths"] = model.bandwidths.tolist()
            return FittedModel(config=cfg, columns=columns, model=model,
                               standardization=std.standardization,
                               bandwidth=bw, info=info)

        if cfg.kind == "rf":
            model = rf_fit(sub, cfg.forest, cfg.seed)
        elif cfg.kind == "rf_coords":
            model = rf_fit(sub.with_coordinates(), cfg.forest, cfg.seed)
        else:  # grf
            k = cfg.grf_k if cfg.grf_k is not None else math.ceil(sub.n / 4)
            k = min(max(k, sub.p + 2), sub.n)
            model = grf_fit(sub, k, cfg.forest, cfg.seed)
            info["k"] = k
        return FittedModel(config=cfg, columns=columns, model=model,
                           standardization=None, bandwidth=None, info=info)

    def predict(self, state: FittedModel, test: FeatureTable) -> np.ndarray:
        return predict_table(state, test)

    def info(self, state: FittedModel) -> dict:
        return state.info


def predict_table(state: FittedModel, test: FeatureTable) -> np.ndarray:
    """Predict a feature table's rows in original target units."""
    cfg = state.config
    sub = test.select(state.columns)
    if cfg.kind in LINEAR_KINDS:
        if cfg.kind == "mgwr":
            raise UnfittedModelError("MGWR does not support out-of-sample prediction")
        rec = state.standardization
        Xs = (sub.X - rec.x_mean) / rec.x_std
        if cfg.kind == "ols":
            yhat = state.model.predict(Xs)
        else:
            yhat = gwr_predict(state.model, sub.locations, Xs)
        return yhat * rec.y_std + rec.y_mean
    if cfg.kind == "rf":
        return rf_predict(state.model, sub.X)
    if cfg.kind == "rf_coords":
        return rf_predict(state.model, sub.with_coordinates().X)
    return grf_predict(state.model, sub.locations, sub.X)


def in_sample_predictions(state: FittedModel, train: FeatureTable) -> np.ndarray:
    """Fitted values on the training table, in original units."""
    cfg = state.config
    if cfg.kind in LINEAR_KINDS:
        rec = state.standardization
        return state.model.fitted * rec.y_std + rec.y_mean
    return predict_table(state, train)
