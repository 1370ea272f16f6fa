"""Comparison tables and exports: model-evaluation reports, the GWR
parameter ablation grid, per-station coefficient exports, and the feature
selection report."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .diagnostics import kfold_cv, metrics, morans_i
from .linear import loocv_r2, significance
from .pipeline import (
    LINEAR_KINDS,
    FittedModel,
    ModelConfig,
    ModelPipeline,
    in_sample_predictions,
)
from .selection import SelectionResult, CollinearityReport
from .spatial import GeodemandError, SpatialIndex, knn_weights
from .table import FeatureTable

EVAL_COLUMNS = [
    "Algorithm", "Fixed/Adaptive", "Kernel", "Adjusted R2", "AICc",
    "Out-of-Sample RMSE", "Out-of-Sample R2", "LOOCV R2",
    "Residual Moran's I P-Value",
]

ABLATE_COLUMNS = [
    "Algorithm", "Fixed/Adaptive", "Bandwidth Selection", "Kernel",
    "Adjusted R2", "AICc", "Out-of-Sample RMSE", "Out-of-Sample R2",
    "Residual Moran's I P-Value",
]

ALGORITHM_LABELS = {
    "ols": "OLS Regression",
    "gwr": "GWR",
    "mgwr": "MGWR",
    "rf": "Global Random Forest",
    "rf_coords": "Global RF with coordinates",
    "grf": "Geographical Random Forest",
}


def residual_moran_p(table: FeatureTable, residuals, k: int = 8,
                     n_permutations: int = 999, seed: int = 0) -> float:
    w = knn_weights(SpatialIndex(table.locations), k=min(k, table.n - 1))
    return morans_i(residuals, w, n_permutations=n_permutations, seed=seed).p_value


def evaluate_model(table: FeatureTable, config: ModelConfig, cv_k: int = 10,
                   seed: int = 0, n_permutations: int = 999) -> dict:
    """One Table-1-style row: in-sample metrics from a full fit, pooled
    out-of-sample metrics from K-fold CV (skipped where unsupported)."""
    pipeline = ModelPipeline(config)
    state = pipeline.fit(table)
    fitted = in_sample_predictions(state, table)
    residuals = table.y - fitted

    row: dict = {c: None for c in EVAL_COLUMNS}
    row["Algorithm"] = ALGORITHM_LABELS[config.kind]
    if config.kind == "gwr":
        row["Fixed/Adaptive"] = state.bandwidth.mode.capitalize()
        row["Kernel"] = str(config.kernel).capitalize()
    elif config.kind == "mgwr":
        row["Fixed/Adaptive"] = "Adaptive"
        row["Kernel"] = str(config.kernel).capitalize()
    elif config.kind == "grf":
        row["Fixed/Adaptive"] = "Adaptive"
        row["Kernel"] = "Boxcar"

    if config.kind in LINEAR_KINDS:
        model = state.model
        rep = metrics(table.y, fitted, trS=model.trS,
                      sigma_hat=float(np.sqrt(model.rss / model.n)))
        row["Adjusted R2"] = rep.adjusted_r2
        row["AICc"] = model.aicc
        std_y = (table.y - state.standardization.y_mean) / state.standardization.y_std
        row["LOOCV R2"] = loocv_r2(std_y, model.fitted, model.hat_diag)
    row["Residual Moran's I P-Value"] = residual_moran_p(
        table, residuals, n_permutations=n_permutations, seed=seed)

    if config.kind != "mgwr":
        cv = kfold_cv(table, pipeline, k=cv_k, seed=seed)
        row["Out-of-Sample RMSE"] = cv.pooled.rmse
        row["Out-of-Sample R2"] = cv.pooled.r2
    return row


def evaluate_models(table: FeatureTable, configs: list[ModelConfig],
                    cv_k: int = 10, seed: int = 0,
                    n_permutations: int = 999) -> pd.DataFrame:
    rows = [evaluate_model(table, c, cv_k=cv_k, seed=seed,
                           n_permutations=n_permutations) for c in configs]
    return pd.DataFrame(rows, columns=EVAL_COLUMNS)


def ablate(table: FeatureTable, grid: list[tuple[str, str, str]],
           k: int = 10, seed: int = 0, n_permutations: int = 999) -> pd.DataFrame:
    """GWR parameter ablation over (mode, criterion, kernel) triples.

    Emits one row per configuration with in-sample adjusted R²/AICc/Moran p
    and pooled out-of-sample RMSE/R², sorted by out-of-sample R² (failed
    rows are marked and sort last).
    """
    if not grid:
        raise GeodemandError("ablation grid is empty")
    rows = []
    for mode, criterion, kernel in grid:
        row: dict = {c: None for c in ABLATE_COLUMNS}
        row["Algorithm"] = "GWR"
        row["Fixed/Adaptive"] = mode.capitalize()
        row["Bandwidth Selection"] = criterion.upper() if criterion == "cv" else "AICc"
        row["Kernel"] = str(kernel).capitalize()
        try:
            config = ModelConfig(kind="gwr", kernel=kernel, mode=mode,
                                 criterion=criterion, seed=seed)
            pipeline = ModelPipeline(config)
            state = pipeline.fit(table)
            model = state.model
            fitted = in_sample_predictions(state, table)
            rep = metrics(table.y, fitted, trS=model.trS,
                          sigma_hat=float(np.sqrt(model.rss / model.n)))
            row["Adjusted R2"] = rep.adjusted_r2
            row["AICc"] = model.aicc
            row["Residual Moran's I P-Value"] = residual_moran_p(
                table, table.y - fitted, n_permutations=n_permutations, seed=seed)
            cv = kfold_cv(table, pipeline, k=k, seed=seed)
            row["Out-of-Sample RMSE"] = cv.pooled.rmse
            row["Out-of-Sample R2"] = cv.pooled.r2
        except Exception as e:  # failed rows are reported, run continues
            row["error"] = str(e)
        rows.append(row)
    df = pd.DataFrame(rows)
    df = df.sort_values("Out-of-Sample R2", na_position="first")
    return df.reset_index(drop=True)


def format_aligned(df: pd.DataFrame, floatfmt: str = "{:.4f}") -> str:
    """Plain-text table with aligned columns."""
    def fmt(v):
        if v is None or (isinstance(v, float) and np.isnan(v)):
            return ""
        if isinstance(v, float):
            return floatfmt.format(v)
        return str(v)

    cells = [[fmt(v) for v in row] for row in df.itertuples(index=False)]
    headers = [str(c) for c in df.columns]
    widths = [max(len(h), *(len(r[j]) for r in cells)) if cells else len(h)
              for j, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for r in cells:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)))
    return "\n".join(lines)


def coefficient_export(state: FittedModel, table: FeatureTable,
                       raw_alpha: float = 0.05) -> pd.DataFrame:
    """Per-(station, feature) local coefficients with significance flags.

    Source table for Table-2/3-style summaries and choropleth rendering.
    """
    if state.kind not in ("gwr", "mgwr"):
        raise GeodemandError("coefficient export needs a GWR or MGWR fit")
    fit = state.model
    report = significance(fit, raw_alpha=raw_alpha)
    names = [r.feature for r in report.rows]
    crit = {}
    from scipy import stats

    for r in report.rows:
        crit[r.feature] = stats.t.ppf(1.0 - r.adjusted_alpha / 2.0, report.dof)
    rows = []
    for j, name in enumerate(names):
        t = fit.tvalues[:, j]
        for i in range(len(table.station_ids)):
            rows.append({
                "station_id": table.station_ids[i],
                "x_m": table.locations[i, 0],
                "y_m": table.locations[i, 1],
                "feature": name,
                "beta": fit.beta[i, j],
                "se": fit.se[i, j],
                "t": t[i],
                "significant": bool(np.isfinite(t[i]) and abs(t[i]) > crit[name]),
            })
    return pd.DataFrame(rows)


def selection_report(result: SelectionResult, all_columns,
                     removed_collinear=(), vif_report: CollinearityReport | None = None,
                     ) -> pd.DataFrame:
    """Selection table: feature, selected_by, max local VIF, chosen lambda."""
    vif_max = {}
    if vif_report is not None:
        for j, c in enumerate(vif_report.columns):
            col = vif_report.vif[:, j]
            vif_max[c] = float(col.max())
    rows = []
    for c in all_columns:
        label = result.labels.get(c, "not_selected")
        if c in removed_collinear:
            label = "removed_collinear"
        rows.append({
            "feature": c,
            "selected_by": label,
            "max_local_vif": vif_max.get(c),
            "lambda": result.lam,
        })
    return pd.DataFrame(rows)
