"""OLS and geographically weighted regression.

GWR fits a weighted least-squares model at every station, with weights
decaying by distance under a kernel and bandwidth; the bandwidth is tuned
by golden-section search under AICc or leave-one-out CV. Standard errors
use a pooled residual variance; the hat diagonal supports the closed-form
LOOCV score.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy import stats

from .optimize import golden_section
from .spatial import BandwidthSpec, GeodemandError, Kernel, kernel_weight
from .table import FeatureTable

RANK_TOL = 1e-10  # pivot-ratio tolerance for local solves
INTERCEPT = "intercept"


class RankDeficientError(GeodemandError):
    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(f"design is rank deficient; dependent columns: {self.columns}")


class SingularLocalDesignError(GeodemandError):
    def __init__(self, location: int, detail: str = ""):
        self.location = location
        super().__init__(
            f"weighted design is singular at location {location}"
            f"{'; ' + detail if detail else ''}; try a larger bandwidth"
        )


class DegreesOfFreedomError(GeodemandError):
    pass


def aicc_score(n: int, rss: float, trS: float) -> float:
    """Corrected AIC for a linear smoother: 2n ln(sigma) + n ln(2 pi)
    + n (n + trS) / (n - 2 - trS), with the ML sigma = sqrt(rss / n)."""
    if n - 2.0 - trS <= 0:
        return float("inf")
    sigma = np.sqrt(rss / n)
    if sigma <= 0:
        return float("-inf")
    return float(2.0 * n * np.log(sigma) + n * np.log(2.0 * np.pi)
                 + n * (n + trS) / (n - 2.0 - trS))


def _augment(X: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones(len(X)), X])


def _pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)


def _resolve_bw_from_distances(d: np.ndarray, spec: BandwidthSpec) -> float:
    """Bandwidth in meters given the distance vector to the training points."""
    if spec.mode == "fixed":
        return float(spec.distance)
    dd = d
    zeros = np.flatnonzero(dd == 0.0)
    if len(zeros) > 0:
        dd = np.delete(dd, zeros[0])
    k = int(spec.k)
    if k > len(dd) + 1:
        raise GeodemandError(f"adaptive k={k} exceeds available points ({len(dd)})")
    k = min(k, len(dd))  # k = n at an indexed point means "all neighbors"
    return float(np.partition(dd, k - 1)[k - 1])


def _local_solve(Xa: np.ndarray, y: np.ndarray, w: np.ndarray, loc: int,
                 need_m: bool = False):
    """Solve the weighted normal equations at one calibration location.

    Returns (beta, M) with M = (Xa' W Xa)^-1 Xa' W when `need_m`, else
    (beta, None). Raises SingularLocalDesignError on rank deficiency.
    """
    p1 = Xa.shape[1]
    if np.count_nonzero(w) < p1 + 1:
        raise SingularLocalDesignError(loc, f"only {np.count_nonzero(w)} nonzero weights")
    Xw = Xa * w[:, None]
    A = Xw.T @ Xa
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as e:
        raise SingularLocalDesignError(loc, str(e)) from None
    diag = np.diag(L) ** 2
    if diag.min() < RANK_TOL * diag.max():
        raise SingularLocalDesignError(loc, "pivot ratio below tolerance")
    if need_m:
        M = scipy.linalg.cho_solve((L, True), Xw.T)
        return M @ y, M
    beta = scipy.linalg.cho_solve((L, True), Xw.T @ y)
    return beta, None


# ------------------------------------------------------------------- OLS

@dataclass(frozen=True)
class OLSFit:
    beta: np.ndarray  # intercept first
    fitted: np.ndarray
    residuals: np.ndarray
    hat_diag: np.ndarray
    sigma_hat: float
    trS: float
    rss: float
    columns: tuple[str, ...]
    n: int

    @property
    def aicc(self) -> float:
        return aicc_score(self.n, self.rss, self.trS)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return _augment(np.asarray(X, dtype=float)) @ self.beta


def ols_fit(table: FeatureTable) -> OLSFit:
    """Least squares with an intercept; errors name dependent columns."""
    Xa = _augment(table.X)
    y = table.y
    n, p1 = Xa.shape
    q, r, piv = scipy.linalg.qr(Xa, mode="economic", pivoting=True)
    d = np.abs(np.diag(r))
    rank = int(np.sum(d > max(n, p1) * np.finfo(float).eps * d.max()))
    if rank < p1:
        names = (INTERCEPT,) + table.columns
        raise RankDeficientError([names[j] for j in piv[rank:]])
    beta = scipy.linalg.solve_triangular(r, q.T @ y)
    beta = beta[np.argsort(piv)]
    fitted = Xa @ beta
    resid = y - fitted
    rss = float(resid @ resid)
    hat = (q * q).sum(axis=1)
    sigma = np.sqrt(rss / (n - p1)) if n > p1 else 0.0
    return OLSFit(beta=beta, fitted=fitted, residuals=resid, hat_diag=hat,
                  sigma_hat=float(sigma), trS=float(p1), rss=rss,
                  columns=table.columns, n=n)


# ------------------------------------------------------------------- GWR

@dataclass(frozen=True)
class GWRFit:
    kernel: Kernel
    bandwidth: BandwidthSpec
    resolved_bw_m: np.ndarray  # per calibration location
    beta: np.ndarray  # (n, p+1), intercept first
    se: np.ndarray
    tvalues: np.ndarray
    hat_diag: np.ndarray
    trS: float
    fitted: np.ndarray
    residuals: np.ndarray
    sigma_hat: float
    rss: float
    columns: tuple[str, ...]
    train_X: np.ndarray
    train_y: np.ndarray
    train_locations: np.ndarray

    @property
    def n(self) -> int:
        return len(self.train_y)

    @property
    def aicc(self) -> float:
        return aicc_score(self.n, self.rss, self.trS)


def gwr_fit(table: FeatureTable, kernel: Kernel | str,
            bandwidth: BandwidthSpec) -> GWRFit:
    """Calibrate a local weighted least-squares model at every station."""
    kernel = Kernel(kernel)
    Xa = _augment(table.X)
    y = table.y
    locs = table.locations
    n, p1 = Xa.shape
    beta = np.empty((n, p1))
    hat = np.empty(n)
    cct = np.empty((n, p1))
    resolved = np.empty(n)
    for i in range(n):
        d = np.linalg.norm(locs - locs[i], axis=1)
        b = _resolve_bw_from_distances(d, bandwidth)
        resolved[i] = b
        w = kernel_weight(kernel, d, b)
        bi, M = _local_solve(Xa, y, w, loc=i, need_m=True)
        beta[i] = bi
        hat[i] = Xa[i] @ M[:, i]
        cct[i] = (M * M).sum(axis=1)
    fitted = (Xa * beta).sum(axis=1)
    resid = y - fitted
    rss = float(resid @ resid)
    trS = float(hat.sum())
    if n - trS <= 0:
        raise DegreesOfFreedomError(f"effective parameters trS={trS:.2f} >= n={n}")
    sigma2 = rss / (n - trS)
    se = np.sqrt(cct * sigma2)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, beta / se, np.inf)
    return GWRFit(kernel=kernel, bandwidth=bandwidth, resolved_bw_m=resolved,
                  beta=beta, se=se, tvalues=t, hat_diag=hat, trS=trS,
                  fitted=fitted, residuals=resid, sigma_hat=float(np.sqrt(sigma2)),
                  rss=rss, columns=table.columns, train_X=table.X.copy(),
                  train_y=y.copy(), train_locations=locs.copy())


def gwr_predict(fit: GWRFit, locations, X) -> np.ndarray:
    """Out-of-sample GWR: calibrate a local model at each query location
    from the retained training data and predict x . beta.

    Rows whose local design is singular get NaN markers (with a warning);
    the remaining rows are still predicted. Never touches query targets.
    """
    locations = np.atleast_2d(np.asarray(locations, dtype=float))
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != len(fit.columns):
        raise GeodemandError(
            f"query has {X.shape[1]} features, model expects {len(fit.columns)}"
        )
    Xa_train = _augment(fit.train_X)
    Xa_query = _augment(X)
    out = np.empty(len(X))
    for i, (loc, xq) in enumerate(zip(locations, Xa_query)):
        d = np.linalg.norm(fit.train_locations - loc, axis=1)
        try:
            b = _resolve_bw_from_distances(d, fit.bandwidth)
            w = kernel_weight(fit.kernel, d, b)
            bi, _ = _local_solve(Xa_train, fit.train_y, w, loc=i)
            out[i] = xq @ bi
        except GeodemandError as e:
            warnings.warn(f"gwr_predict row {i}: {e}")
            out[i] = np.nan
    return out


# -------------------------------------------------- bandwidth selection

@dataclass(frozen=True)
class BandwidthSearch:
    spec: BandwidthSpec
    score: float
    criterion: str
    trace: tuple = ()


def _cv_score(Xa, y, locs, kernel, spec) -> float:
    """Leave-one-out CV with each location's own weight forced to zero."""
    n = len(y)
    sse = 0.0
    for i in range(n):
        d = np.linalg.norm(locs - locs[i], axis=1)
        try:
            b = _resolve_bw_from_distances(d, spec)
            w = kernel_weight(kernel, d, b)
            w[i] = 0.0
            bi, _ = _local_solve(Xa, y, w, loc=i)
        except GeodemandError:
            return float("inf")
        sse += float((y[i] - Xa[i] @ bi) ** 2)
    return sse


def _aicc_pass(Xa, y, locs, kernel, spec) -> float:
    n = len(y)
    hat = np.empty(n)
    fitted = np.empty(n)
    for i in range(n):
        d = np.linalg.norm(locs - locs[i], axis=1)
        try:
            b = _resolve_bw_from_distances(d, spec)
            w = kernel_weight(kernel, d, b)
            bi, M = _local_solve(Xa, y, w, loc=i, need_m=True)
        except GeodemandError:
            return float("inf")
        fitted[i] = Xa[i] @ bi
        hat[i] = Xa[i] @ M[:, i]
    rss = float(((y - fitted) ** 2).sum())
    return aicc_score(n, rss, float(hat.sum()))


def select_bandwidth(table: FeatureTable, kernel: Kernel | str, mode: str,
                     criterion: str = "aicc") -> BandwidthSearch:
    """Golden-section bandwidth search minimizing AICc or the CV score.

    Fixed mode searches meters in [max over locations of the (p+2)-NN
    distance, max pairwise distance]; adaptive mode searches neighbor
    counts in [p+2, n].
    """
    kernel = Kernel(kernel)
    criterion = criterion.lower()
    if criterion not in ("aicc", "cv"):
        raise GeodemandError(f"unknown criterion {criterion!r}")
    Xa = _augment(table.X)
    y, locs = table.y, table.locations
    n, p = table.n, table.p
    if n < p + 3:
        raise GeodemandError(f"need n >= p+3 for bandwidth selection, got n={n}")

    D = _pairwise_distances(locs, locs)
    SD = np.sort(D, axis=1)

    def spec_for(x):
        return (BandwidthSpec.fixed(x) if mode == "fixed"
                else BandwidthSpec.adaptive(int(x)))

    def score(x):
        spec = spec_for(x)
        if criterion == "cv":
            return _cv_score(Xa, y, locs, kernel, spec)
        return _aicc_pass(Xa, y, locs, kernel, spec)

    if mode == "fixed":
        lo = float(SD[:, min(p + 2, n - 1)].max())
        hi = float(D.max())
        best, s, trace = golden_section(score, lo, hi, tol=1e-3 * (hi - lo))
    elif mode == "adaptive":
        lo, hi = p + 2, n
        best, s, trace = golden_section(score, lo, hi, tol=1.0, integer=True)
    else:
        raise GeodemandError(f"unknown bandwidth mode {mode!r}")
    return BandwidthSearch(spec=spec_for(best), score=float(s),
                           criterion=criterion, trace=tuple(trace))


# -------------------------------------------------------- LOOCV, inference

def loocv_r2(y: np.ndarray, fitted: np.ndarray, hat_diag: np.ndarray) -> float:
    """Closed-form leave-one-out R² for a linear smoother.

    MSE_LOOCV = mean(((y - yhat) / (1 - H_ii))²); score
    = 1 - MSE_LOOCV / Var(y) (population variance).
    """
    hat_diag = np.asarray(hat_diag, dtype=float)
    bad = np.flatnonzero(hat_diag >= 1.0 - 1e-10)
    if len(bad):
        raise GeodemandError(f"hat diagonal reaches 1 at row(s) {bad.tolist()[:5]}")
    press = ((np.asarray(y) - np.asarray(fitted)) / (1.0 - hat_diag)) ** 2
    var = float(np.var(y))
    if var <= 0:
        raise GeodemandError("target variance is zero")
    return float(1.0 - press.mean() / var)


@dataclass(frozen=True)
class FeatureSignificance:
    feature: str
    mean: float
    std: float
    min: float
    median: float
    max: float
    mean_t: float
    std_t: float
    adjusted_alpha: float
    pct_significant: float
    bandwidth_k: int | None = None
    bandwidth_median_km: float | None = None


@dataclass(frozen=True)
class SignificanceReport:
    rows: tuple[FeatureSignificance, ...]
    raw_alpha: float
    enp: float
    dof: float

    def to_frame(self):
        import pandas as pd

        return pd.DataFrame([r.__dict__ for r in self.rows])


def significance(fit, raw_alpha: float = 0.05) -> SignificanceReport:
    """Per-feature summary of local estimates with multiple-test-adjusted
    alpha: GWR divides by the model ENP, MGWR by each feature's own ENP."""
    names = (INTERCEPT,) + tuple(fit.columns)
    n = fit.beta.shape[0]
    trS = fit.trS
    if trS >= n - 2:
        raise DegreesOfFreedomError(f"trS={trS:.2f} leaves no residual degrees of freedom")
    dof = n - trS
    p1 = len(names)
    rows = []
    for j, name in enumerate(names):
        if hasattr(fit, "enp"):
            enp_j = max(float(fit.enp[j]), 1e-12)
            alpha_star = min(raw_alpha / enp_j, 1.0) if enp_j > 1 else raw_alpha
            bw_k = int(fit.bandwidths[j])
            bw_km = float(fit.resolved_median_km[j])
        else:
            alpha_star = min(raw_alpha * p1 / max(trS, p1), raw_alpha)
            bw_k, bw_km = None, None
        crit = stats.t.ppf(1.0 - alpha_star / 2.0, dof)
        b = fit.beta[:, j]
        t = fit.tvalues[:, j]
        finite_t = t[np.isfinite(t)]
        rows.append(FeatureSignificance(
            feature=name,
            mean=float(b.mean()), std=float(b.std()), min=float(b.min()),
            median=float(np.median(b)), max=float(b.max()),
            mean_t=float(finite_t.mean()) if len(finite_t) else float("nan"),
            std_t=float(finite_t.std()) if len(finite_t) else float("nan"),
            adjusted_alpha=float(alpha_star),
            pct_significant=float(100.0 * np.mean(np.abs(t) > crit)),
            bandwidth_k=bw_k, bandwidth_median_km=bw_km,
        ))
    return SignificanceReport(rows=tuple(rows), raw_alpha=raw_alpha,
                              enp=float(trS), dof=float(dof))
