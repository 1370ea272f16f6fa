"""Exact tree SHAP attribution for the forest models.

Path-dependent conditional expectations: descending a split on a feature
outside the conditioning set averages both children weighted by training
cover. Attributions are computed per tree with the polynomial-time
path algorithm and averaged over the ensemble, so
base_value + sum(phi) equals the forest prediction exactly (local
accuracy) up to float rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forest import LEAF, ForestModel, Tree, rf_predict
from .spatial import GeodemandError


@dataclass(frozen=True)
class ShapValues:
    """Per-feature additive attribution for one prediction."""

    phi: np.ndarray
    base_value: float
    columns: tuple[str, ...]

    @property
    def prediction(self) -> float:
        return float(self.base_value + self.phi.sum())


class _Path:
    """Unique-feature path with subset-size polynomial weights."""

    __slots__ = ("d", "z", "o", "w")

    def __init__(self):
        self.d: list[int] = []  # feature of each path element
        self.z: list[float] = []  # fraction of "zero" (cover-averaged) paths
        self.o: list[float] = []  # fraction of "one" (x-following) paths
        self.w: list[float] = []  # permutation weights

    def copy(self) -> "_Path":
        p = _Path.__new__(_Path)
        p.d = self.d.copy()
        p.z = self.z.copy()
        p.o = self.o.copy()
        p.w = self.w.copy()
        return p

    def extend(self, pz: float, po: float, pi: int) -> None:
        l = len(self.d)
        self.d.append(pi)
        self.z.append(pz)
        self.o.append(po)
        self.w.append(1.0 if l == 0 else 0.0)
        for i in range(l - 1, -1, -1):
            self.w[i + 1] += po * self.w[i] * (i + 1) / (l + 1)
            self.w[i] = pz * self.w[i] * (l - i) / (l + 1)

    def unwind(self, i: int) -> None:
        l = len(self.d) - 1
        o_i, z_i = self.o[i], self.z[i]
        nxt = self.w[l]
        if o_i != 0.0:
            for j in range(l - 1, -1, -1):
                tmp = self.w[j]
                self.w[j] = nxt * (l + 1) / ((j + 1) * o_i)
                nxt = tmp - self.w[j] * z_i * (l - j) / (l + 1)
        else:
            for j in range(l - 1, -1, -1):
                self.w[j] = self.w[j] * (l + 1) / (z_i * (l - j))
        for j in range(i, l):
            self.d[j] = self.d[j + 1]
            self.z[j] = self.z[j + 1]
            self.o[j] = self.o[j + 1]
        self.d.pop()
        self.z.pop()
        self.o.pop()
        self.w.pop()

    def unwound_sum(self, i: int) -> float:
        """Sum of weights after unwinding element i, without mutating."""
        l = len(self.d) - 1
        o_i, z_i = self.o[i], self.z[i]
        total = 0.0
        nxt = self.w[l]
        if o_i != 0.0:
            for j in range(l - 1, -1, -1):
                tmp = nxt * (l + 1) / ((j + 1) * o_i)
                total += tmp
                nxt = self.w[j] - tmp * z_i * (l - j) / (l + 1)
        else:
            for j in range(l - 1, -1, -1):
                total += self.w[j] * (l + 1) / (z_i * (l - j))
        return total


def _tree_shap(tree: Tree, x: np.ndarray, phi: np.ndarray) -> None:
    feature, threshold = tree.feature, tree.threshold
    left, right, value, cover = tree.left, tree.right, tree.value, tree.cover

    def recurse(node: int, path: _Path, pz: float, po: float, pi: int) -> None:
        path = path.copy()
        path.extend(pz, po, pi)
        f = feature[node]
        if f == LEAF:
            for i in range(1, len(path.d)):
                total = path.unwound_sum(i)
                phi[path.d[i]] += total * (path.o[i] - path.z[i]) * value[node]
            return
        hot, cold = ((left[node], right[node]) if x[f] <= threshold[node]
                     else (right[node], left[node]))
        iz = io = 1.0
        k = -1
        for idx in range(1, len(path.d)):
            if path.d[idx] == f:
                k = idx
                break
        if k >= 0:
            iz, io = path.z[k], path.o[k]
            path.unwind(k)
        recurse(hot, path, iz * cover[hot] / cover[node], io, f)
        recurse(cold, path, iz * cover[cold] / cover[node], 0.0, f)

    recurse(0, _Path(), 1.0, 1.0, -1)


def tree_shap(model: ForestModel, x) -> ShapValues:
    """Exact path-dependent SHAP attribution of a single prediction.

    base_value is the mean over trees of each tree's root expectation, so
    base_value + sum(phi) reproduces rf_predict(x).
    """
    x = np.asarray(x, dtype=float).ravel()
    p = len(model.columns)
    if len(x) != p:
        raise GeodemandError(f"probe has {len(x)} features, model expects {p}")
    phi = np.zeros(p)
    base = 0.0
    for tree in model.trees:
        _tree_shap(tree, x, phi)
        base += tree.value[0]
    n = len(model.trees)
    return ShapValues(phi=phi / n, base_value=base / n, columns=model.columns)


@dataclass(frozen=True)
class ShapSummary:
    """Ranked mean-|phi| importance plus per-row (value, phi) pairs."""

    columns: tuple[str, ...]
    importance: np.ndarray  # mean |phi| per feature
    phi: np.ndarray  # (n rows, p)
    values: np.ndarray  # feature values per row

    def ranked(self) -> list[tuple[str, float]]:
        order = np.argsort(-self.importance, kind="stable")
        return [(self.columns[j], float(self.importance[j])) for j in order]

    def to_frame(self):
        import pandas as pd

        rows = []
        for i in range(len(self.phi)):
            for j, c in enumerate(self.columns):
                rows.append({"row": i, "feature": c,
                             "value": self.values[i, j], "phi": self.phi[i, j]})
        return pd.DataFrame(rows)


def shap_summary(model: ForestModel, X) -> ShapSummary:
    """Mean absolute attribution per feature over the given rows, with the
    per-observation export used for beeswarm-style rendering."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    phi = np.empty((len(X), len(model.columns)))
    for i, x in enumerate(X):
        phi[i] = tree_shap(model, x).phi
    return ShapSummary(columns=model.columns,
                       importance=np.abs(phi).mean(axis=0),
                       phi=phi, values=X.copy())
