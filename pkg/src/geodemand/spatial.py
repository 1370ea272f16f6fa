"""Planar spatial primitives shared by every model in the toolkit.

Distance-to-weight kernels, bandwidth resolution (fixed distance or
adaptive neighbor count), a k-NN index with deterministic tie-breaking,
point-in-radius aggregation, nearest joins, and sparse k-NN weight
matrices for autocorrelation statistics.

Coordinates must arrive projected, in meters; all distances are Euclidean.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree


class GeodemandError(ValueError):
    """Base class for toolkit errors."""


class UnfittedModelError(GeodemandError):
    """A model reference cannot serve the requested operation."""


class InvalidBandwidthError(GeodemandError):
    pass


class EmptyBufferMeanError(GeodemandError):
    """Mean requested over a buffer containing no points."""

    def __init__(self, center, radius):
        self.center = tuple(float(c) for c in center)
        self.radius = float(radius)
        super().__init__(
            f"mean over empty buffer at ({self.center[0]:.1f}, {self.center[1]:.1f}) "
            f"with radius {self.radius:.1f} m"
        )


class Kernel(str, Enum):
    """Distance-decay families; weight(0) = 1 and weight is non-increasing."""

    GAUSSIAN = "gaussian"
    EXPONENTIAL = "exponential"
    BISQUARE = "bisquare"
    BOXCAR = "boxcar"

    @property
    def compact(self) -> bool:
        return self in (Kernel.BISQUARE, Kernel.BOXCAR)


@dataclass(frozen=True)
class BandwidthSpec:
    """Fixed-distance or adaptive-k bandwidth.

    mode="fixed" uses `distance` meters everywhere; mode="adaptive" resolves,
    per location, the distance to the k-th nearest indexed point.
    """

    mode: str  # "fixed" | "adaptive"
    distance: float | None = None
    k: int | None = None

    def __post_init__(self):
        if self.mode == "fixed":
            if self.distance is None or not np.isfinite(self.distance) or self.distance <= 0:
                raise InvalidBandwidthError(f"fixed bandwidth must be > 0, got {self.distance}")
        elif self.mode == "adaptive":
            if self.k is None or int(self.k) < 1:
                raise InvalidBandwidthError(f"adaptive bandwidth needs k >= 1, got {self.k}")
        else:
            raise InvalidBandwidthError(f"unknown bandwidth mode {self.mode!r}")

    @staticmethod
    def fixed(distance: float) -> "BandwidthSpec":
        return BandwidthSpec(mode="fixed", distance=float(distance))

    @staticmethod
    def adaptive(k: int) -> "BandwidthSpec":
        return BandwidthSpec(mode="adaptive", k=int(k))


def kernel_weight(kernel: Kernel | str, d, b) -> np.ndarray | float:
    """Kernel weight(s) for distance(s) `d` at bandwidth `b` meters.

    gaussian: exp(-0.5 (d/b)^2); exponential: exp(-d/b);
    bisquare: (1-(d/b)^2)^2 for d < b else 0; boxcar: 1 for d < b else 0.
    """
    if b <= 0 or not np.isfinite(b):
        raise InvalidBandwidthError(f"bandwidth must be > 0, got {b}")
    kernel = Kernel(kernel)
    d_arr = np.asarray(d, dtype=float)
    u = d_arr / b
    if kernel is Kernel.GAUSSIAN:
        w = np.exp(-0.5 * u**2)
    elif kernel is Kernel.EXPONENTIAL:
        w = np.exp(-u)
    elif kernel is Kernel.BISQUARE:
        w = np.where(u < 1.0, (1.0 - np.minimum(u, 1.0) ** 2) ** 2, 0.0)
    else:  # boxcar
        w = np.where(u < 1.0, 1.0, 0.0)
    return float(w) if np.isscalar(d) else w


class SpatialIndex:
    """k-NN index over projected points with stable integer ids.

    Backed by a scipy cKDTree for candidate retrieval; distance ties are
    broken by lowest id so queries are deterministic across runs.
    """

    def __init__(self, points: Iterable[Sequence[float]]):
        pts = np.atleast_2d(np.asarray(list(points), dtype=float))
        if pts.size == 0:
            raise GeodemandError("SpatialIndex needs at least one point")
        if pts.shape[1] != 2:
            raise GeodemandError(f"points must be (n, 2), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise GeodemandError("points must be finite")
        self.points = pts
        self._tree = cKDTree(pts)

    def __len__(self) -> int:
        return len(self.points)

    def knn(self, query, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Ids and distances of the k nearest points, ties broken by lowest id.

        Returns exactly min(k, n) neighbors ordered by non-decreasing distance.
        """
        q = np.asarray(query, dtype=float)
        n = len(self.points)
        k = min(int(k), n)
        if k < 1:
            return np.empty(0, dtype=int), np.empty(0)
        d, _ = self._tree.query(q, k=k)
        d_k = float(np.atleast_1d(d)[-1])
        # re-rank every candidate at the boundary distance so exact ties
        # resolve by id, not by tree traversal order
        cand = self._tree.query_ball_point(q, r=d_k * (1.0 + 1e-12) + 1e-12)
        cand = np.asarray(sorted(cand), dtype=int)
        dists = np.linalg.norm(self.points[cand] - q, axis=1)
        order = np.lexsort((cand, dists))
        take = order[:k]
        return cand[take], dists[take]

    def within(self, center, radius: float) -> np.ndarray:
        """Ids of points with distance <= radius (closed ball), ascending id."""
        ids = self._tree.query_ball_point(np.asarray(center, dtype=float), r=float(radius))
        ids = np.asarray(sorted(ids), dtype=int)
        if len(ids) == 0:
            return ids
        d = np.linalg.norm(self.points[ids] - np.asarray(center, dtype=float), axis=1)
        return ids[d <= radius + 1e-9 * max(radius, 1.0)]

    def distances_from(self, query) -> np.ndarray:
        """Dense distance vector from `query` to every indexed point."""
        q = np.asarray(query, dtype=float)
        return np.linalg.norm(self.points - q, axis=1)


def resolve_bandwidth(index: SpatialIndex, at, spec: BandwidthSpec) -> float:
    """Resolve a bandwidth spec to meters at a query location.

    Adaptive mode returns the distance to the k-th nearest indexed point,
    excluding the query itself when it coincides with an indexed point.
    """
    if spec.mode == "fixed":
        return float(spec.distance)
    k = int(spec.k)
    n = len(index)
    d = index.distances_from(at)
    self_hits = np.flatnonzero(d == 0.0)
    if len(self_hits) > 0:
        d = np.delete(d, self_hits[0])
    if k > n:
        raise InvalidBandwidthError(f"adaptive k={k} exceeds available points ({n})")
    k = min(k, len(d))  # k = n at an indexed point means "all neighbors"
    return float(np.partition(d, k - 1)[k - 1])


def buffer_aggregate(index: SpatialIndex, values, center, radius: float, agg: str):
    """Aggregate `values` over indexed points within `radius` of `center`.

    Closed buffer (distance <= radius). `agg` is one of sum/mean/count;
    sum and count over an empty buffer return 0, mean raises
    EmptyBufferMeanError carrying the center and radius.
    """
    if radius < 0:
        raise GeodemandError(f"radius must be >= 0, got {radius}")
    ids = index.within(center, radius)
    if agg == "count":
        return int(len(ids))
    vals = np.asarray(values, dtype=float)
    if len(vals) != len(index):
        raise GeodemandError("values length must match index size")
    if agg == "sum":
        return float(vals[ids].sum()) if len(ids) else 0.0
    if agg == "mean":
        if len(ids) == 0:
            raise EmptyBufferMeanError(center, radius)
        return float(vals[ids].mean())
    raise GeodemandError(f"unknown aggregation {agg!r}")


def nearest_join(sources, targets: SpatialIndex) -> np.ndarray:
    """Id of the nearest target for each source point; ties -> lowest id."""
    src = np.atleast_2d(np.asarray(sources, dtype=float))
    out = np.empty(len(src), dtype=int)
    for i, s in enumerate(src):
        ids, _ = targets.knn(s, 1)
        out[i] = ids[0]
    return out


@dataclass(frozen=True)
class SpatialWeights:
    """Sparse non-negative spatial weight matrix with zero diagonal."""

    w: sp.csr_matrix
    row_standardized: bool
    descriptor: str = ""

    @property
    def w_total(self) -> float:
        return float(self.w.sum())

    @property
    def n(self) -> int:
        return self.w.shape[0]


def knn_weights(index: SpatialIndex, k: int, row_standardize: bool = True) -> SpatialWeights:
    """Binary k-nearest-neighbor weights (self excluded), optionally row-standardized."""
    n = len(index)
    if not 1 <= k < n:
        raise GeodemandError(f"knn_weights needs 1 <= k < n, got k={k}, n={n}")
    rows, cols = [], []
    for i in range(n):
        ids, _ = index.knn(index.points[i], k + 1)
        neigh = [j for j in ids if j != i][:k]
        rows.extend([i] * len(neigh))
        cols.extend(neigh)
    data = np.ones(len(rows))
    w = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
    if row_standardize:
        row_sums = np.asarray(w.sum(axis=1)).ravel()
        inv = np.divide(1.0, row_sums, out=np.zeros_like(row_sums), where=row_sums > 0)
        w = sp.diags(inv) @ w
        w = sp.csr_matrix(w)
    desc = f"knn(k={k}, row_standardized={row_standardize})"
    return SpatialWeights(w=w, row_standardized=row_standardize, descriptor=desc)
