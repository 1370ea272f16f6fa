"""Random-forest regression from scratch, plus per-station local forests.

Trees are CART regressors: axis-aligned splits minimizing weighted child
variance, midpoint thresholds, deterministic tie-breaking (lowest feature
index, then lowest threshold). Forests bootstrap rows and subsample
features per node; per-tree RNG streams are derived from (seed, tree
index) so parallel and serial training agree bit for bit.

The geographical variant trains one local forest per station on its k
nearest stations (hard boxcar inclusion) and dispatches queries to the
nearest station's model.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .spatial import GeodemandError, SpatialIndex
from .table import FeatureTable

LEAF = -1


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 500
    mtry: int | None = None  # default ceil(p / 3)
    min_leaf: int = 5
    max_depth: int | None = None
    bootstrap: bool = True

    def resolve_mtry(self, p: int) -> int:
        m = self.mtry if self.mtry is not None else math.ceil(p / 3)
        if not 1 <= m <= p:
            raise GeodemandError(f"mtry={m} outside [1, {p}]")
        return m

    def validate(self, n: int, p: int) -> None:
        if self.n_trees < 1:
            raise GeodemandError("n_trees must be >= 1")
        if self.min_leaf < 1:
            raise GeodemandError("min_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise GeodemandError("max_depth must be >= 0")
        self.resolve_mtry(p)


@dataclass
class Tree:
    """Flat-array binary regression tree.

    feature[i] == -1 marks a leaf. `value` is the mean training target at
    the node (leaves and internal nodes alike); `cover` is the number of
    training rows (bootstrap multiplicity included) that reached the node.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    cover: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(len(X))
        stack = [(0, np.arange(len(X)))]
        while stack:
            node, rows = stack.pop()
            if len(rows) == 0:
                continue
            f = self.feature[node]
            if f == LEAF:
                out[rows] = self.value[node]
                continue
            mask = X[rows, f] <= self.threshold[node]
            stack.append((self.left[node], rows[mask]))
            stack.append((self.right[node], rows[~mask]))
        return out

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "cover": self.cover.tolist(),
        }

    @staticmethod
    def from_dict(d: dict) -> "Tree":
        return Tree(feature=np.asarray(d["feature"], dtype=np.int64),
                    threshold=np.asarray(d["threshold"], dtype=float),
                    left=np.asarray(d["left"], dtype=np.int64),
                    right=np.asarray(d["right"], dtype=np.int64),
                    value=np.asarray(d["value"], dtype=float),
                    cover=np.asarray(d["cover"], dtype=float))


class _TreeBuilder:
    def __init__(self, X, y, mtry, min_leaf, max_depth, rng):
        self.X, self.y = X, y
        self.mtry, self.min_leaf, self.max_depth = mtry, min_leaf, max_depth
        self.rng = rng
        self.nodes: list[list] = []  # feature, threshold, left, right, value, cover

    def build(self, rows) -> Tree:
        self._grow(rows, depth=0)
        cols = list(zip(*self.nodes))
        return Tree(feature=np.asarray(cols[0], dtype=np.int64),
                    threshold=np.asarray(cols[1], dtype=float),
                    left=np.asarray(cols[2], dtype=np.int64),
                    right=np.asarray(cols[3], dtype=np.int64),
                    value=np.asarray(cols[4], dtype=float),
                    cover=np.asarray(cols[5], dtype=float))

    def _grow(self, rows, depth) -> int:
        node = len(self.nodes)
        yv = self.y[rows]
        value = float(yv.mean())
        self.nodes.append([LEAF, 0.0, -1, -1, value, float(len(rows))])
        if (len(rows) < 2 * self.min_leaf
                or (self.max_depth is not None and depth >= self.max_depth)
                or np.all(yv == yv[0])):
            return node
        split = self._best_split(rows)
        if split is None:
            return node
        feat, thr = split
        mask = self.X[rows, feat] <= thr
        left = self._grow(rows[mask], depth + 1)
        right = self._grow(rows[~mask], depth + 1)
        self.nodes[node][0] = feat
        self.nodes[node][1] = thr
        self.nodes[node][2] = left
        self.nodes[node][3] = right
        return node

    def _best_split(self, rows):
        p = self.X.shape[1]
        candidates = np.sort(self.rng.choice(p, size=self.mtry, replace=False))
        yv = self.y[rows]
        n = len(rows)
        best = None  # (sse, feature, threshold)
        for feat in candidates:
            xv = self.X[rows, feat]
            order = np.argsort(xv, kind="stable")
            xs, ys = xv[order], yv[order]
            csum = np.cumsum(ys)
            csq = np.cumsum(ys * ys)
            total, total_sq = csum[-1], csq[-1]
            # valid split positions: after index i (1-based count i+1 on the left)
            counts = np.arange(1, n)
            ok = (xs[1:] != xs[:-1]) & (counts >= self.min_leaf) \
                & (n - counts >= self.min_leaf)
            if not np.any(ok):
                continue
            nl = counts[ok].astype(float)
            nr = n - nl
            sl, sr = csum[:-1][ok], total - csum[:-1][ok]
            ql, qr = csq[:-1][ok], total_sq - csq[:-1][ok]
            sse = (ql - sl * sl / nl) + (qr - sr * sr / nr)
            j = int(np.argmin(sse))  # first minimum -> lowest threshold
            cand_sse = float(sse[j])
            pos = np.flatnonzero(ok)[j]
            thr = float((xs[pos] + xs[pos + 1]) / 2.0)
            if best is None or cand_sse < best[0] - 1e-15 * max(1.0, abs(best[0])):
                best = (cand_sse, int(feat), thr)
        return None if best is None else (best[1], best[2])


@dataclass
class ForestModel:
    trees: list[Tree]
    params: ForestParams
    seed: int
    columns: tuple[str, ...]
    uses_coordinates: bool
    base_value: float  # training-target mean
    y_range: tuple[float, float] = (0.0, 0.0)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return rf_predict(self, X)


def _tree_rngs(seed: int, n_trees: int) -> list[np.random.Generator]:
    # spawned streams are a pure function of (seed, tree index)
    return [np.random.default_rng(s)
            for s in np.random.SeedSequence(seed).spawn(n_trees)]


def rf_fit(table: FeatureTable, params: ForestParams | None = None,
           seed: int = 0) -> ForestModel:
    """Train a random forest on the table's (raw) features.

    Bootstrap rows per tree, `mtry` features per node, variance-reduction
    splits. Deterministic given `seed`. A constant target yields
    single-leaf trees (legal, with a warning).
    """
    params = params or ForestParams()
    X, y = table.X, table.y
    n, p = X.shape
    if n < 2:
        raise GeodemandError("need at least 2 rows")
    params.validate(n, p)
    if np.all(y == y[0]):
        warnings.warn("constant target: every tree is a single leaf")
    mtry = params.resolve_mtry(p)
    trees = []
    for rng in _tree_rngs(seed, params.n_trees):
        rows = (rng.integers(0, n, size=n) if params.bootstrap
                else np.arange(n))
        builder = _TreeBuilder(X, y, mtry, params.min_leaf, params.max_depth, rng)
        trees.append(builder.build(np.sort(rows)))
    return ForestModel(trees=trees, params=params, seed=seed,
                       columns=table.columns,
                       uses_coordinates=table.uses_coordinates,
                       base_value=float(y.mean()),
                       y_range=(float(y.min()), float(y.max())))


def rf_predict(model: ForestModel, X) -> np.ndarray:
    """Mean prediction over trees; bounded by the training target range."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != len(model.columns):
        raise GeodemandError(
            f"query has {X.shape[1]} features, model expects {len(model.columns)}"
        )
    acc = np.zeros(len(X))
    for tree in model.trees:
        acc += tree.predict(X)
    return acc / len(model.trees)


@dataclass
class GRFModel:
    """One local forest per training station; queries dispatch to the
    nearest station's model (ties -> lowest id)."""

    local_models: list[ForestModel]
    locations: np.ndarray
    k: int
    params: ForestParams
    seed: int
    columns: tuple[str, ...]
    index: SpatialIndex = field(repr=False, default=None)

    def __post_init__(self):
        if self.index is None:
            self.index = SpatialIndex(self.locations)


def grf_fit(table: FeatureTable, k: int, params: ForestParams | None = None,
            seed: int = 0) -> GRFModel:
    """Geographical random forest: a local model per station, trained on
    its k nearest stations (including itself; hard boxcar inclusion).

    Local training rows are ordered by station index, so k = n reproduces
    the global forest exactly under a shared seed. No global-model blending.
    """
    params = params or ForestParams()
    n = table.n
    if k > n:
        raise GeodemandError(f"k={k} exceeds station count {n}")
    if k < table.p + 2:
        raise GeodemandError(f"k={k} below p+2={table.p + 2}")
    index = SpatialIndex(table.locations)
    models = []
    for i in range(n):
        ids, _ = index.knn(table.locations[i], k)
        rows = np.sort(ids)
        models.append(rf_fit(table.subset(rows), params, seed))
    return GRFModel(local_models=models, locations=table.locations.copy(),
                    k=k, params=params, seed=seed, columns=table.columns,
                    index=index)


def grf_predict(model: GRFModel, locations, X) -> np.ndarray:
    """Evaluate the nearest training station's local forest on each row."""
    locations = np.atleast_2d(np.asarray(locations, dtype=float))
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.empty(len(X))
    for i, (loc, x) in enumerate(zip(locations, X)):
        ids, _ = model.index.knn(loc, 1)
        out[i] = rf_predict(model.local_models[ids[0]], x[None, :])[0]
    return out
