import numpy as np
import pytest

from geodemand.forest import LEAF, ForestModel, ForestParams, Tree, rf_fit, rf_predict
from geodemand.shap import shap_summary, tree_shap
from geodemand.table import FeatureTable

from oracles import brute_shap


def make_table(n=60, p=3, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    y = X @ rng.normal(size=p) + 0.5 * X[:, 0] * X[:, p - 1] + rng.normal(0, 0.2, n)
    return FeatureTable(station_ids=np.arange(n),
                        locations=rng.uniform(0, 1000, size=(n, 2)),
                        X=X, columns=tuple(f"f{j}" for j in range(p)), y=y)


def single_split_tree(feature, threshold, lo, hi, n_lo=6, n_hi=4):
    n = n_lo + n_hi
    mean = (n_lo * lo + n_hi * hi) / n
    return Tree(feature=np.array([feature, -1, -1]),
                threshold=np.array([threshold, 0.0, 0.0]),
                left=np.array([1, -1, -1]), right=np.array([2, -1, -1]),
                value=np.array([mean, lo, hi]),
                cover=np.array([float(n), float(n_lo), float(n_hi)]))


def forest_of(trees, p):
    return ForestModel(trees=trees, params=ForestParams(n_trees=len(trees)),
                       seed=0, columns=tuple(f"f{j}" for j in range(p)),
                       uses_coordinates=False, base_value=0.0, y_range=(0, 1))


class TestSingleTree:
    def test_depth_one_only_split_feature_attributed(self):
        tree = single_split_tree(feature=2, threshold=0.0, lo=-1.0, hi=3.0)
        model = forest_of([tree], p=4)
        for xv in (-0.5, 0.7):
            x = np.array([9.0, 9.0, xv, 9.0])
            s = tree_shap(model, x)
            assert s.phi[0] == s.phi[1] == s.phi[3] == 0.0
            pred = rf_predict(model, x[None, :])[0]
            assert s.phi[2] == pytest.approx(pred - s.base_value, abs=1e-12)

    def test_base_value_is_root_expectation(self):
        tree = single_split_tree(feature=0, threshold=0.0, lo=2.0, hi=10.0)
        model = forest_of([tree], p=2)
        s = tree_shap(model, np.array([1.0, 0.0]))
        assert s.base_value == pytest.approx((6 * 2.0 + 4 * 10.0) / 10, abs=1e-12)


class TestLocalAccuracy:
    @pytest.mark.parametrize("seed", range(5))
    def test_base_plus_phi_equals_prediction(self, seed):
        t = make_table(n=80, p=4, seed=seed)
        model = rf_fit(t, ForestParams(n_trees=8, min_leaf=3), seed=seed)
        rng = np.random.default_rng(seed + 100)
        for x in rng.normal(size=(5, 4)):
            s = tree_shap(model, x)
            pred = rf_predict(model, x[None, :])[0]
            assert s.base_value + s.phi.sum() == pytest.approx(pred, abs=1e-9)


class TestBruteForceOracle:
    def test_matches_subset_enumeration(self):
        rng = np.random.default_rng(42)
        worst = 0.0
        for trial in range(10):
            p = int(rng.integers(2, 7))
            t = make_table(n=50, p=p, seed=trial)
            model = rf_fit(
                t, ForestParams(n_trees=int(rng.integers(1, 6)), mtry=p,
                                min_leaf=2, max_depth=3), seed=trial)
            for x in rng.normal(size=(2, p)):
                mine = tree_shap(model, x).phi
                oracle = brute_shap(model, x)
                worst = max(worst, float(np.abs(mine - oracle).max()))
        assert worst < 1e-9


class TestAxioms:
    def test_dummy_unused_feature_exactly_zero(self):
        # feature 1 never appears in any split
        trees = [single_split_tree(0, 0.0, -1.0, 1.0),
                 single_split_tree(2, 0.5, 2.0, -2.0)]
        model = forest_of(trees, p=3)
        s = tree_shap(model, np.array([0.3, 77.0, 0.1]))
        assert s.phi[1] == 0.0

    def test_symmetry_under_mirrored_usage(self):
        # two trees identical up to swapping which duplicate feature they
        # split on; the ensemble treats features 0 and 1 symmetrically
        t0 = single_split_tree(0, 0.0, -1.0, 3.0)
        t1 = single_split_tree(1, 0.0, -1.0, 3.0)
        model = forest_of([t0, t1], p=3)
        x = np.array([0.4, 0.4, 9.9])
        s = tree_shap(model, x)
        assert s.phi[0] == pytest.approx(s.phi[1], abs=1e-12)
        assert s.phi[2] == 0.0


class TestShapSummary:
    def test_single_feature_holds_all_importance(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(80, 1))
        y = 3.0 * X[:, 0] + rng.normal(0, 0.1, 80)
        t = FeatureTable(station_ids=np.arange(80),
                         locations=rng.uniform(0, 100, (80, 2)),
                         X=X, columns=("only",), y=y)
        model = rf_fit(t, ForestParams(n_trees=5, min_leaf=3), seed=0)
        summary = shap_summary(model, t.X[:20])
        assert summary.importance[0] > 0
        assert summary.ranked()[0][0] == "only"

    def test_irrelevant_feature_scores_low(self):
        ratios = []
        for seed in range(10):
            rng = np.random.default_rng(seed)
            X = rng.normal(size=(150, 3))
            y = 4.0 * X[:, 0] + 2.0 * X[:, 1] + rng.normal(0, 0.1, 150)
            t = FeatureTable(station_ids=np.arange(150),
                             locations=rng.uniform(0, 100, (150, 2)),
                             X=X, columns=("a", "b", "dead"), y=y)
            model = rf_fit(t, ForestParams(n_trees=20, mtry=3, min_leaf=5),
                           seed=seed)
            summary = shap_summary(model, t.X[:40])
            imp = dict(zip(summary.columns, summary.importance))
            ratios.append(imp["dead"] / max(imp.values()))
        assert np.mean(ratios) < 0.05

    def test_export_frame_shape(self):
        t = make_table(n=40, p=2, seed=3)
        model = rf_fit(t, ForestParams(n_trees=3, min_leaf=5), seed=0)
        summary = shap_summary(model, t.X[:10])
        df = summary.to_frame()
        assert set(df.columns) == {"row", "feature", "value", "phi"}
        assert len(df) == 10 * 2
