"""Feature selection: LASSO with cross-validated penalty, plus local
collinearity screening via per-location VIF and condition numbers.

The LASSO solver is cyclic coordinate descent with soft-thresholding on the
objective (1/2) sum (y - b0 - X b)^2 + lambda * sum |b_j|; the intercept is
fitted unpenalized.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spatial import (
    BandwidthSpec,
    GeodemandError,
    Kernel,
    kernel_weight,
    resolve_bandwidth,
    SpatialIndex,
)
from .table import FeatureTable

VIF_THRESHOLD = 10.0
CN_THRESHOLD = 30.0


@dataclass(frozen=True)
class LassoFit:
    lam: float
    intercept: float
    coefficients: np.ndarray
    n_iterations: int
    converged: bool

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.intercept + X @ self.coefficients


def lasso_lambda_max(X: np.ndarray, y: np.ndarray) -> float:
    """Smallest penalty at which every slope is exactly zero."""
    return float(np.max(np.abs(X.T @ (y - y.mean()))))


def lasso_fit(X, y, lam: float, tol: float = 1e-7, max_sweeps: int = 10_000,
              warm_start: LassoFit | None = None) -> LassoFit:
    """Cyclic coordinate descent with soft-thresholding.

    Converged when the largest coefficient change in a sweep drops below
    `tol` and the stationarity residuals are below `tol` as well (so the
    KKT invariant holds at convergence), or after `max_sweeps` sweeps.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if lam < 0:
        raise GeodemandError(f"lambda must be >= 0, got {lam}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise GeodemandError("non-finite values in LASSO inputs")
    n, p = X.shape
    norms = (X * X).sum(axis=0)
    beta = warm_start.coefficients.copy() if warm_start is not None else np.zeros(p)
    b0 = warm_start.intercept if warm_start is not None else float(y.mean())
    r = y - b0 - X @ beta
    sweeps = 0
    converged = False
    for sweeps in range(1, max_sweeps + 1):
        max_delta = 0.0
        for j in range(p):
            if norms[j] == 0.0:
                continue
            old = beta[j]
            rho = X[:, j] @ r + norms[j] * old
            new = np.sign(rho) * max(abs(rho) - lam, 0.0) / norms[j]
            if new != old:
                r += X[:, j] * (old - new)
                beta[j] = new
                max_delta = max(max_delta, abs(new - old))
        new_b0 = b0 + r.mean()
        if new_b0 != b0:
            r -= new_b0 - b0
            max_delta = max(max_delta, abs(new_b0 - b0))
            b0 = new_b0
        if max_delta < tol:
            g = X.T @ r
            kkt = np.where(beta == 0.0,
                           np.maximum(np.abs(g) - lam, 0.0),
                           np.abs(g - lam * np.sign(beta)))
            if kkt.max() < tol:
                converged = True
                break
    return LassoFit(lam=float(lam), intercept=float(b0), coefficients=beta,
                    n_iterations=sweeps, converged=converged)


def kkt_residuals(X, y, fit: LassoFit) -> np.ndarray:
    """Per-feature violation of the LASSO stationarity conditions."""
    X = np.asarray(X, dtype=float)
    r = np.asarray(y, dtype=float) - fit.intercept - X @ fit.coefficients
    g = X.T @ r
    out = np.empty(len(g))
    for j, (gj, bj) in enumerate(zip(g, fit.coefficients)):
        if bj == 0.0:
            out[j] = max(0.0, abs(gj) - fit.lam)
        else:
            out[j] = abs(gj - fit.lam * np.sign(bj))
    return out


def lasso_path(X, y, n_points: int = 100, lam_min_ratio: float = 1e-3,
               tol: float = 1e-7) -> tuple[np.ndarray, list[LassoFit]]:
    """Warm-started fits over a log-spaced path from lambda_max downward."""
    lam_max = lasso_lambda_max(X, y)
    lams = np.geomspace(lam_max, lam_min_ratio * lam_max, n_points)
    fits: list[LassoFit] = []
    warm = None
    for lam in lams:
        warm = lasso_fit(X, y, lam, tol=tol, warm_start=warm)
        fits.append(warm)
    return lams, fits


@dataclass(frozen=True)
class SelectionResult:
    selected: tuple[str, ...]
    labels: dict  # feature -> "lasso" | "manual" | "not_selected"
    lam: float
    lam_path: np.ndarray
    cv_mse: np.ndarray
    fit: LassoFit


def lasso_select(table: FeatureTable, k_folds: int = 10, seed: int = 0,
                 manual_include=(), manual_exclude=(),
                 n_points: int = 100) -> SelectionResult:
    """Choose lambda by K-fold CV (minimum mean MSE) and report the selection.

    The selected set is the nonzero-coefficient features at the chosen
    lambda, union `manual_include`, minus `manual_exclude`. Fold assignment
    is deterministic given `seed`.
    """
    for name in tuple(manual_include) + tuple(manual_exclude):
        if name not in table.columns:
            raise GeodemandError(f"unknown feature {name!r} in manual list")
    X, y = table.X, table.y
    n = table.n
    lam_max = lasso_lambda_max(X, y)
    lams = np.geomspace(lam_max, 1e-3 * lam_max, n_points)
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    folds = np.array_split(order, k_folds)
    mse = np.zeros((k_folds, n_points))
    for f, test_idx in enumerate(folds):
        train_idx = np.setdiff1d(order, test_idx, assume_unique=True)
        warm = None
        for li, lam in enumerate(lams):
            warm = lasso_fit(X[train_idx], y[train_idx], lam, warm_start=warm)
            err = y[test_idx] - warm.predict(X[test_idx])
            mse[f, li] = float(err @ err) / len(test_idx)
    mean_mse = mse.mean(axis=0)
    best = int(np.argmin(mean_mse))
    fit = lasso_fit(X, y, lams[best])
    nonzero = {c for c, b in zip(table.columns, fit.coefficients) if b != 0.0}
    selected = (nonzero | set(manual_include)) - set(manual_exclude)
    labels = {}
    for c in table.columns:
        if c in selected and c in nonzero:
            labels[c] = "lasso"
        elif c in selected:
            labels[c] = "manual"
        else:
            labels[c] = "not_selected"
    ordered = tuple(c for c in table.columns if c in selected)
    return SelectionResult(selected=ordered, labels=labels, lam=float(lams[best]),
                           lam_path=lams, cv_mse=mean_mse, fit=fit)


# --------------------------------------------------------- local collinearity

@dataclass(frozen=True)
class CollinearityReport:
    vif: np.ndarray  # (n locations, p features); +inf marks singular designs
    condition_number: np.ndarray  # (n,)
    flagged: tuple[str, ...]
    columns: tuple[str, ...] = ()
    thresholds: dict = field(default_factory=lambda: {
        "vif": VIF_THRESHOLD, "cn": CN_THRESHOLD})


def local_collinearity(table: FeatureTable, kernel: Kernel | str,
                       bandwidth: BandwidthSpec) -> CollinearityReport:
    """Per-location VIF and condition number of the kernel-weighted design.

    VIF comes from the inverse weighted correlation matrix; the condition
    number is the singular-value ratio of the weighted, column-scaled
    design. Singular local designs get +inf markers and are flagged.
    """
    if table.p < 2:
        raise GeodemandError("local collinearity needs >= 2 features")
    X = table.X
    n, p = X.shape
    index = SpatialIndex(table.locations)
    vif = np.empty((n, p))
    cn = np.empty(n)
    for i in range(n):
        d = index.distances_from(table.locations[i])
        b = resolve_bandwidth(index, table.locations[i], bandwidth)
        w = kernel_weight(kernel, d, b)
        sw = np.sqrt(w)
        Xw = sw[:, None] * X
        # condition number of the column-scaled weighted design
        norms = np.linalg.norm(Xw, axis=0)
        if np.any(norms == 0):
            cn[i] = np.inf
            vif[i] = np.inf
            continue
        sv = np.linalg.svd(Xw / norms, compute_uv=False)
        cn[i] = np.inf if sv[-1] <= 1e-12 * sv[0] else float(sv[0] / sv[-1])
        # VIF from the weighted correlation matrix
        wsum = w.sum()
        mu = (w @ X) / wsum
        Xc = X - mu
        cov = (Xc * w[:, None]).T @ Xc / wsum
        sd = np.sqrt(np.diag(cov))
        if np.any(sd <= 0):
            vif[i] = np.inf
            continue
        corr = cov / np.outer(sd, sd)
        try:
            inv = np.linalg.inv(corr)
            diag = np.diag(inv)
            if np.any(diag < 0) or not np.all(np.isfinite(diag)):
                vif[i] = np.inf
            else:
                vif[i] = np.maximum(diag, 1.0)
        except np.linalg.LinAlgError:
            vif[i] = np.inf
    flagged = {c for j, c in enumerate(table.columns)
               if np.any(vif[:, j] > VIF_THRESHOLD)}
    if np.any(cn > CN_THRESHOLD):
        flagged = set(table.columns)
    ordered = tuple(c for c in table.columns if c in flagged)
    return CollinearityReport(vif=vif, condition_number=cn, flagged=ordered,
                              columns=table.columns)


def remove_collinear(table: FeatureTable, kernel: Kernel | str,
                     bandwidth: BandwidthSpec,
                     lasso_coefficients: dict) -> tuple[tuple[str, ...], CollinearityReport]:
    """Drop flagged features until no collinearity flags remain.

    Within each flagged set, the feature with the smallest absolute LASSO
    coefficient goes first. Returns (removed features, final report).
    """
    removed: list[str] = []
    current = table
    report = local_collinearity(current, kernel, bandwidth)
    while report.flagged and current.p > 2:
        victim = min(report.flagged,
                     key=lambda c: (abs(lasso_coefficients.get(c, 0.0)), c))
        removed.append(victim)
        current = current.select([c for c in current.columns if c != victim])
        report = local_collinearity(current, kernel, bandwidth)
    return tuple(removed), report
