"""Model-comparison metrics, K-fold cross-validation, and residual
Moran's I with Monte-Carlo significance."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linear import aicc_score
from .spatial import GeodemandError, SpatialWeights
from .table import FeatureTable


@dataclass(frozen=True)
class MetricsReport:
    rmse: float
    r2: float
    adjusted_r2: float
    aicc: float | None
    n: int
    p_effective: float

    def as_dict(self) -> dict:
        return dict(rmse=self.rmse, r2=self.r2, adjusted_r2=self.adjusted_r2,
                    aicc=self.aicc, n=self.n, p_effective=self.p_effective)


def rmse(y, yhat) -> float:
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    return float(np.sqrt(((y - yhat) ** 2).mean()))


def metrics(y, yhat, trS: float | None = None,
            sigma_hat: float | None = None) -> MetricsReport:
    """RMSE, R² (1 - SSE/SST), adjusted R², and AICc when trS and sigma
    are supplied. Out-of-sample R² can be negative."""
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if len(y) != len(yhat):
        raise GeodemandError("length mismatch between targets and predictions")
    n = len(y)
    if n < 2:
        raise GeodemandError("need n >= 2")
    sse = float(((y - yhat) ** 2).sum())
    sst = float(((y - y.mean()) ** 2).sum())
    if sst <= 0:
        raise GeodemandError("R² undefined: target variance is zero")
    rmse = float(np.sqrt(sse / n))
    r2 = 1.0 - sse / sst
    p_eff = float(trS) if trS is not None else 1.0
    if n - p_eff <= 0:
        raise GeodemandError(f"adjusted R² needs n > p_effective, got {n} <= {p_eff}")
    adj = 1.0 - (n - 1.0) / (n - p_eff) * (1.0 - r2)
    aicc = None
    if trS is not None and sigma_hat is not None:
        aicc = aicc_score(n, n * sigma_hat**2, trS)
    return MetricsReport(rmse=rmse, r2=r2, adjusted_r2=adj, aicc=aicc, n=n,
                         p_effective=p_eff)


@dataclass(frozen=True)
class CVResult:
    fold_assignment: np.ndarray  # fold id per row
    fold_metrics: tuple[MetricsReport, ...]
    mean_rmse: float  # CV_K for the RMSE loss
    mean_r2: float
    pooled: MetricsReport  # over concatenated held-out predictions
    predictions: np.ndarray  # held-out prediction per row
    fold_info: tuple[dict, ...] = ()
    seed: int = 0

    @property
    def k(self) -> int:
        return len(self.fold_metrics)


def fold_assignment(n: int, k: int, seed: int) -> np.ndarray:
    """Seeded shuffle, contiguous folds; sizes differ by at most one."""
    if k < 2 or k > n:
        raise GeodemandError(f"need 2 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    out = np.empty(n, dtype=int)
    for f, chunk in enumerate(np.array_split(order, k)):
        out[chunk] = f
    return out


def kfold_cv(table: FeatureTable, pipeline, k: int = 10, seed: int = 0) -> CVResult:
    """K-fold CV with per-fold selection and tuning on training rows only.

    `pipeline` exposes fit(train_table) -> state, predict(state, test_table)
    -> predictions in original target units, and optionally info(state).
    Pooled metrics are computed over the concatenated held-out predictions.
    """
    assignment = fold_assignment(table.n, k, seed)
    predictions = np.empty(table.n)
    reports = []
    infos = []
    for f in range(k):
        test_rows = np.flatnonzero(assignment == f)
        train_rows = np.flatnonzero(assignment != f)
        try:
            state = pipeline.fit(table.subset(train_rows))
            yhat = pipeline.predict(state, table.subset(test_rows))
        except Exception as e:
            raise GeodemandError(f"pipeline failed in fold {f}: {e}") from e
        predictions[test_rows] = yhat
        reports.append(metrics(table.y[test_rows], yhat))
        infos.append(pipeline.info(state) if hasattr(pipeline, "info") else {})
    pooled = metrics(table.y, predictions)
    return CVResult(fold_assignment=assignment, fold_metrics=tuple(reports),
                    mean_rmse=float(np.mean([r.rmse for r in reports])),
                    mean_r2=float(np.mean([r.r2 for r in reports])),
                    pooled=pooled, predictions=predictions,
                    fold_info=tuple(infos), seed=seed)


@dataclass(frozen=True)
class MoranResult:
    I: float
    p_value: float
    n_permutations: int
    expected_I: float
    perm_summary: dict = field(default_factory=dict)
    weights_descriptor: str = ""
    alternative: str = "greater"


def morans_i(residuals, weights: SpatialWeights, n_permutations: int = 999,
             seed: int = 0, alternative: str = "greater") -> MoranResult:
    """Moran's I of mean-centered residuals with a permutation pseudo
    p-value: p = (1 + #{I_perm >= I_obs}) / (n_permutations + 1) for the
    one-sided (positive autocorrelation) test. Deterministic given seed.
    """
    r = np.asarray(residuals, dtype=float)
    n = len(r)
    if n < 4:
        raise GeodemandError("Moran's I needs n >= 4")
    if weights.w.shape != (n, n):
        raise GeodemandError("weights shape does not match residuals")
    z = r - r.mean()
    denom = float(z @ z)
    if denom <= 0:
        raise GeodemandError("Moran's I undefined: residuals are constant")
    W = weights.w
    w_total = weights.w_total
    I_obs = float(n / w_total * (z @ (W @ z)) / denom)

    rng = np.random.default_rng(seed)
    Zp = rng.permuted(np.tile(z, (n_permutations, 1)), axis=1)
    num = (Zp * (Zp @ W.T)).sum(axis=1)
    I_perm = n / w_total * num / denom
    p_greater = (1.0 + float(np.sum(I_perm >= I_obs))) / (n_permutations + 1.0)
    p_less = (1.0 + float(np.sum(I_perm <= I_obs))) / (n_permutations + 1.0)
    if alternative == "greater":
        p = p_greater
    elif alternative == "less":
        p = p_less
    elif alternative == "two-sided":
        p = min(1.0, 2.0 * min(p_greater, p_less))
    else:
        raise GeodemandError(f"unknown alternative {alternative!r}")
    return MoranResult(
        I=I_obs, p_value=p, n_permutations=n_permutations,
        expected_I=-1.0 / (n - 1.0),
        perm_summary={"mean": float(I_perm.mean()), "std": float(I_perm.std()),
                      "min": float(I_perm.min()), "max": float(I_perm.max())},
        weights_descriptor=weights.descriptor, alternative=alternative,
    )
