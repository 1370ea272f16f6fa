"""Multiscale GWR: one bandwidth per feature, calibrated by backfitting.

Each additive term f_j = beta_j(u, v) * x_j is smoothed by a univariate
GWR at its own adaptive bandwidth; terms are updated cyclically on partial
residuals until the score of change in RSS stabilizes. Per-term hat
matrices are accumulated afterwards at the final bandwidths, giving
per-feature effective parameter counts for AICc and adjusted-alpha tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linear import (
    DegreesOfFreedomError,
    GeodemandError,
    INTERCEPT,
    _augment,
    _pairwise_distances,
    aicc_score,
    gwr_fit,
    select_bandwidth,
)
from .optimize import golden_section
from .spatial import BandwidthSpec, Kernel
from .table import FeatureTable

HAT_LIMIT = 5000  # n above which n x n hat matrices are refused
TERM_BW_MIN = 3  # univariate local fits need at least 3 neighbors


@dataclass(frozen=True)
class MGWRFit:
    kernel: Kernel
    criterion: str
    bandwidths: np.ndarray  # adaptive k, intercept first
    resolved_median_km: np.ndarray
    beta: np.ndarray  # (n, p+1)
    fitted: np.ndarray
    residuals: np.ndarray
    rss: float
    sigma_hat: float
    enp: np.ndarray | None
    trS: float | None
    hat_diag: np.ndarray | None
    se: np.ndarray | None
    tvalues: np.ndarray | None
    trace: tuple  # (iteration, soc) pairs
    converged: bool
    columns: tuple[str, ...]

    @property
    def n(self) -> int:
        return len(self.fitted)

    @property
    def aicc(self) -> float:
        if self.trS is None:
            raise GeodemandError("AICc needs hat tracking; refit with track_hat=True")
        return aicc_score(self.n, self.rss, self.trS)


def _kernel_matrix(kernel: Kernel, D: np.ndarray, b_rows: np.ndarray) -> np.ndarray:
    u = D / b_rows[:, None]
    if kernel is Kernel.GAUSSIAN:
        return np.exp(-0.5 * u * u)
    if kernel is Kernel.EXPONENTIAL:
        return np.exp(-u)
    if kernel is Kernel.BISQUARE:
        return np.where(u < 1.0, (1.0 - np.minimum(u, 1.0) ** 2) ** 2, 0.0)
    return (u < 1.0).astype(float)


def _term_smoother(kernel, D, SD, x, k) -> tuple[np.ndarray, np.ndarray]:
    """Weight matrix pieces of the univariate no-intercept GWR smoother:
    returns (W * x row-products numerator basis, denominator vector)."""
    bw = SD[:, k]
    W = _kernel_matrix(kernel, D, bw)
    den = W @ (x * x)
    return W, den


def _term_score(kernel, D, SD, x, t, k, criterion) -> float:
    n = len(t)
    W, den = _term_smoother(kernel, D, SD, x, k)
    if np.any(den <= 0):
        return float("inf")
    num = W @ (x * t)
    if criterion == "cv":
        den_i = den - x * x
        num_i = num - x * t
        if np.any(den_i <= 0):
            return float("inf")
        pred = x * num_i / den_i
        return float(((t - pred) ** 2).sum())
    beta = num / den
    fitted = x * beta
    rss = float(((t - fitted) ** 2).sum())
    tr = float((x * x / den).sum())  # S_ii = x_i^2 w_ii / den_i with w_ii = 1
    return aicc_score(n, rss, tr)


def mgwr_fit(table: FeatureTable, kernel: Kernel | str = Kernel.BISQUARE,
             criterion: str = "aicc", soc_tol: float = 1e-5,
             max_iter: int = 200, track_hat: bool = True) -> MGWRFit:
    """Backfitting MGWR with per-term adaptive bandwidths.

    The table must be standardized (linear-model convention); adaptive
    bisquare is the default configuration. Bandwidths are re-searched every
    iteration for the first 10 iterations, then every 5th. Convergence is
    SOC-RSS = |RSS_t - RSS_{t-1}| / RSS_t < soc_tol.
    """
    kernel = Kernel(kernel)
    criterion = criterion.lower()
    if criterion not in ("aicc", "cv"):
        raise GeodemandError(f"unknown criterion {criterion!r}")
    mu = np.abs(table.X.mean(axis=0)).max() if table.p else 0.0
    sd = np.abs(table.X.std(axis=0) - 1.0).max() if table.p else 0.0
    if mu > 1e-6 or sd > 1e-6 or abs(table.y.mean()) > 1e-6:
        raise GeodemandError("MGWR requires a standardized table")

    n = table.n
    Z = _augment(table.X)  # terms: intercept first
    m = Z.shape[1]
    y = table.y
    D = _pairwise_distances(table.locations, table.locations)
    SD = np.sort(D, axis=1)

    pilot_bw = select_bandwidth(table, kernel, "adaptive", criterion).spec
    pilot = gwr_fit(table, kernel, pilot_bw)
    F = pilot.beta * Z  # additive terms f_j
    ks = np.full(m, int(pilot_bw.k))

    rss_prev = float(((y - F.sum(axis=1)) ** 2).sum())
    trace: list[tuple[int, float]] = []
    converged = False
    for it in range(1, max_iter + 1):
        search = it <= 10 or it % 5 == 0
        for j in range(m):
            resid = y - F.sum(axis=1)
            partial = resid + F[:, j]
            x = Z[:, j]
            if search:
                k_best, _, _ = golden_section(
                    lambda k: _term_score(kernel, D, SD, x, partial, k, criterion),
                    TERM_BW_MIN, n - 1, tol=1.0, integer=True)
                ks[j] = k_best
            W, den = _term_smoother(kernel, D, SD, x, ks[j])
            if np.any(den <= 0):
                raise GeodemandError(f"term {j} has a zero local denominator; "
                                     "bandwidth too small")
            beta_j = (W @ (x * partial)) / den
            F[:, j] = x * beta_j
        rss = float(((y - F.sum(axis=1)) ** 2).sum())
        soc = abs(rss - rss_prev) / rss if rss > 0 else 0.0
        trace.append((it, soc))
        rss_prev = rss
        if soc < soc_tol:
            converged = True
            break

    fitted = F.sum(axis=1)
    resid = y - fitted
    rss = float(resid @ resid)
    with np.errstate(divide="ignore", invalid="ignore"):
        beta = np.where(Z != 0, F / Z, 0.0)

    enp = trS = hat_diag = se = tvalues = None
    if track_hat:
        if n > HAT_LIMIT:
            raise GeodemandError(
                f"hat tracking materializes n x n matrices; n={n} exceeds {HAT_LIMIT}. "
                "Refit with track_hat=False.")
        R = _accumulate_hat(kernel, D, SD, Z, ks)
        enp = np.array([float(np.trace(R[j])) for j in range(m)])
        trS = float(enp.sum())
        hat_diag = sum(R)[np.arange(n), np.arange(n)].copy()
        if n - trS <= 0:
            raise DegreesOfFreedomError(f"trS={trS:.2f} >= n={n}")
        sigma2 = rss / (n - trS)
        se = np.empty((n, m))
        for j in range(m):
            cct = (R[j] ** 2).sum(axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                se[:, j] = np.sqrt(sigma2 * cct) / np.abs(
                    np.where(Z[:, j] != 0, Z[:, j], np.inf))
        se = np.where(se == 0, np.inf, se)
        with np.errstate(divide="ignore", invalid="ignore"):
            tvalues = np.where(np.isfinite(se) & (se > 0), beta / se, 0.0)

    sigma_hat = float(np.sqrt(rss / max(n - (trS if trS is not None else m), 1.0)))
    resolved_median = np.array([float(np.median(SD[:, k])) for k in ks]) / 1000.0
    return MGWRFit(kernel=kernel, criterion=criterion, bandwidths=ks.copy(),
                   resolved_median_km=resolved_median, beta=beta, fitted=fitted,
                   residuals=resid, rss=rss, sigma_hat=sigma_hat, enp=enp,
                   trS=trS, hat_diag=hat_diag, se=se, tvalues=tvalues,
                   trace=tuple(trace), converged=converged, columns=table.columns)


def _accumulate_hat(kernel, D, SD, Z, ks, tol: float = 1e-7,
                    max_sweeps: int = 200) -> list[np.ndarray]:
    """Fixed-point iteration for the per-term hat operators R_j.

    Backfitting applies f_j = S_j (y - sum_{l != j} f_l); iterating the
    same recursion on operators, R_j <- S_j (I - sum_{l != j} R_l),
    converges to the linear maps y -> f_j. Term smoothers S_j are held at
    the final bandwidths.
    """
    n = D.shape[0]
    m = Z.shape[1]
    S = []
    for j in range(m):
        x = Z[:, j]
        W, den = _term_smoother(kernel, D, SD, x, ks[j])
        S.append((x[:, None] * W * x[None, :]) / den[:, None])
    R = [np.zeros((n, n)) for _ in range(m)]
    total = np.zeros((n, n))
    eye = np.eye(n)
    for _ in range(max_sweeps):
        delta = 0.0
        for j in range(m):
            new = S[j] @ (eye - (total - R[j]))
            delta = max(delta, float(np.abs(new - R[j]).max()))
            total += new - R[j]
            R[j] = new
        if delta < tol:
            break
    return R
