import numpy as np
import pytest

from geodemand.forest import (
    ForestModel,
    ForestParams,
    GeodemandError,
    Tree,
    grf_fit,
    grf_predict,
    rf_fit,
    rf_predict,
)
from geodemand.table import FeatureTable


def make_table(n=100, p=3, seed=0, y=None, locations=None):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    if y is None:
        y = X @ np.arange(1, p + 1) + rng.normal(0, 0.3, n)
    if locations is None:
        locations = rng.uniform(0, 10_000, size=(n, 2))
    return FeatureTable(station_ids=np.arange(n), locations=locations, X=X,
                        columns=tuple(f"f{j}" for j in range(p)), y=y)


class TestRFFit:
    def test_full_interpolation_single_tree(self):
        t = make_table(n=40, p=2, seed=1)
        params = ForestParams(n_trees=1, mtry=2, min_leaf=1, max_depth=None,
                              bootstrap=False)
        model = rf_fit(t, params, seed=0)
        np.testing.assert_array_equal(rf_predict(model, t.X), t.y)

    def test_same_seed_identical(self):
        t = make_table(seed=2)
        probes = np.random.default_rng(3).normal(size=(20, 3))
        a = rf_predict(rf_fit(t, ForestParams(n_trees=10), seed=7), probes)
        b = rf_predict(rf_fit(t, ForestParams(n_trees=10), seed=7), probes)
        np.testing.assert_array_equal(a, b)

    def test_different_seed_differs(self):
        t = make_table(seed=2)
        probes = np.random.default_rng(3).normal(size=(20, 3))
        a = rf_predict(rf_fit(t, ForestParams(n_trees=10), seed=7), probes)
        b = rf_predict(rf_fit(t, ForestParams(n_trees=10), seed=8), probes)
        assert not np.array_equal(a, b)

    def test_step_target_beats_ols_out_of_sample(self):
        rng = np.random.default_rng(4)
        n = 500
        X = rng.normal(size=(n, 2))
        y = (X[:, 0] > 0).astype(float) + rng.normal(0, 0.05, n)
        t = make_table(n=n, p=2, seed=4, y=y)
        t = FeatureTable(station_ids=t.station_ids, locations=t.locations,
                         X=X, columns=t.columns, y=y)
        train, test = np.arange(250), np.arange(250, 500)
        model = rf_fit(t.subset(train), ForestParams(n_trees=50, min_leaf=5),
                       seed=0)
        rf_mse = np.mean((t.y[test] - rf_predict(model, t.X[test])) ** 2)
        A = np.column_stack([np.ones(250), X[train]])
        beta = np.linalg.lstsq(A, y[train], rcond=None)[0]
        ols_pred = np.column_stack([np.ones(250), X[test]]) @ beta
        ols_mse = np.mean((y[test] - ols_pred) ** 2)
        assert rf_mse < ols_mse

    def test_constant_target_single_leaf_warns(self):
        t = make_table(n=30, y=np.full(30, 5.0))
        with pytest.warns(UserWarning, match="constant target"):
            model = rf_fit(t, ForestParams(n_trees=3), seed=0)
        assert all(tree.n_nodes == 1 for tree in model.trees)
        assert rf_predict(model, t.X[:5]) == pytest.approx([5.0] * 5)

    def test_param_validation(self):
        t = make_table(n=20)
        with pytest.raises(GeodemandError):
            rf_fit(t, ForestParams(mtry=9), seed=0)
        with pytest.raises(GeodemandError):
            rf_fit(t, ForestParams(min_leaf=0), seed=0)


class TestRFPredict:
    def test_identical_single_leaf_trees(self):
        leaf = Tree(feature=np.array([-1]), threshold=np.array([0.0]),
                    left=np.array([-1]), right=np.array([-1]),
                    value=np.array([3.5]), cover=np.array([10.0]))
        model = ForestModel(trees=[leaf, leaf, leaf], params=ForestParams(n_trees=3),
                            seed=0, columns=("a", "b"), uses_coordinates=False,
                            base_value=3.5, y_range=(3.5, 3.5))
        assert rf_predict(model, np.zeros((4, 2))) == pytest.approx([3.5] * 4)

    def test_manual_traversal_oracle(self):
        t = make_table(n=60, p=3, seed=5)
        model = rf_fit(t, ForestParams(n_trees=3, max_depth=4, min_leaf=2), seed=1)
        rng = np.random.default_rng(6)
        for x in rng.normal(size=(10, 3)):
            per_tree = []
            for tree in model.trees:
                node = 0
                while tree.feature[node] != -1:
                    if x[tree.feature[node]] <= tree.threshold[node]:
                        node = tree.left[node]
                    else:
                        node = tree.right[node]
                per_tree.append(tree.value[node])
            assert rf_predict(model, x[None, :])[0] == pytest.approx(
                np.mean(per_tree), abs=1e-12)

    def test_range_bounded(self):
        t = make_table(n=200, p=3, seed=7)
        model = rf_fit(t, ForestParams(n_trees=20), seed=2)
        probes = np.random.default_rng(8).normal(scale=5, size=(1000, 3))
        pred = rf_predict(model, probes)
        assert pred.min() >= t.y.min() - 1e-12
        assert pred.max() <= t.y.max() + 1e-12

    def test_schema_mismatch(self):
        t = make_table()
        model = rf_fit(t, ForestParams(n_trees=2), seed=0)
        with pytest.raises(GeodemandError, match="features"):
            rf_predict(model, np.zeros((2, 5)))

    def test_added_constant_tree_shifts_exactly(self):
        t = make_table(n=80, seed=9)
        model = rf_fit(t, ForestParams(n_trees=4), seed=3)
        probes = np.random.default_rng(10).normal(size=(15, 3))
        old = rf_predict(model, probes)
        c = 42.0
        const_tree = Tree(feature=np.array([-1]), threshold=np.array([0.0]),
                          left=np.array([-1]), right=np.array([-1]),
                          value=np.array([c]), cover=np.array([1.0]))
        bigger = ForestModel(trees=model.trees + [const_tree], params=model.params,
                             seed=model.seed, columns=model.columns,
                             uses_coordinates=False, base_value=model.base_value,
                             y_range=model.y_range)
        new = rf_predict(bigger, probes)
        np.testing.assert_allclose(new, old + (c - old) / 5, atol=1e-12)


class TestGRF:
    def test_k_equals_n_matches_global_rf(self):
        t = make_table(n=50, p=2, seed=11)
        params = ForestParams(n_trees=5, min_leaf=3)
        grf = grf_fit(t, k=50, params=params, seed=4)
        rf = rf_fit(t, params, seed=4)
        pred_grf = grf_predict(grf, t.locations, t.X)
        pred_rf = rf_predict(rf, t.X)
        np.testing.assert_array_equal(pred_grf, pred_rf)

    def test_k_equals_n_identical_across_stations(self):
        t = make_table(n=30, p=2, seed=12)
        grf = grf_fit(t, k=30, params=ForestParams(n_trees=3), seed=5)
        x = np.array([[0.3, -0.2]])
        preds = {rf_predict(m, x)[0] for m in grf.local_models}
        assert len(preds) == 1

    def test_dispatch_nearest_station(self):
        t = make_table(n=40, p=2, seed=13)
        grf = grf_fit(t, k=10, params=ForestParams(n_trees=2), seed=6)
        rng = np.random.default_rng(14)
        queries = rng.uniform(0, 10_000, size=(500, 2))
        X = rng.normal(size=(500, 2))
        got = grf_predict(grf, queries, X)
        d = np.linalg.norm(queries[:, None, :] - t.locations[None, :, :], axis=2)
        owners = d.argmin(axis=1)
        expect = np.array([
            rf_predict(grf.local_models[o], x[None, :])[0]
            for o, x in zip(owners, X)
        ])
        np.testing.assert_array_equal(got, expect)

    def test_query_at_station_uses_its_model(self):
        t = make_table(n=25, p=2, seed=15)
        grf = grf_fit(t, k=8, params=ForestParams(n_trees=2), seed=7)
        x = t.X[3]
        direct = rf_predict(grf.local_models[3], x[None, :])[0]
        assert grf_predict(grf, t.locations[3:4], x[None, :])[0] == direct

    def test_local_regimes_beat_global_on_rare_cluster(self):
        rng = np.random.default_rng(16)
        n_a, n_b = 300, 60
        loc_a = rng.uniform(0, 1000, size=(n_a, 2))
        loc_b = rng.uniform(50_000, 51_000, size=(n_b, 2))
        X = rng.normal(size=(n_a + n_b, 2))
        y = np.concatenate([
            2.0 * X[:n_a, 0],  # common regime
            -3.0 * X[n_a:, 0],  # rare, flipped regime
        ]) + rng.normal(0, 0.1, n_a + n_b)
        t = FeatureTable(station_ids=np.arange(n_a + n_b),
                         locations=np.vstack([loc_a, loc_b]), X=X,
                         columns=("f0", "f1"), y=y)
        train = np.concatenate([np.arange(0, n_a, 2), np.arange(n_a, n_a + n_b, 2)])
        test_b = np.arange(n_a + 1, n_a + n_b, 2)
        params = ForestParams(n_trees=30, min_leaf=3)
        grf = grf_fit(t.subset(train), k=30, params=params, seed=8)
        rf = rf_fit(t.subset(train), params, seed=8)
        grf_mse = np.mean((t.y[test_b] - grf_predict(
            grf, t.locations[test_b], t.X[test_b])) ** 2)
        rf_mse = np.mean((t.y[test_b] - rf_predict(rf, t.X[test_b])) ** 2)
        assert grf_mse < rf_mse

    def test_k_bounds(self):
        t = make_table(n=20, p=2)
        with pytest.raises(GeodemandError):
            grf_fit(t, k=21, params=ForestParams(n_trees=1), seed=0)
        with pytest.raises(GeodemandError):
            grf_fit(t, k=3, params=ForestParams(n_trees=1), seed=0)


class TestDeterminismDetails:
    def test_bootstrap_rows_reproducible(self):
        t = make_table(n=60, seed=17)
        m1 = rf_fit(t, ForestParams(n_trees=4), seed=9)
        m2 = rf_fit(t, ForestParams(n_trees=4), seed=9)
        for t1, t2 in zip(m1.trees, m2.trees):
            np.testing.assert_array_equal(t1.feature, t2.feature)
            np.testing.assert_array_equal(t1.threshold, t2.threshold)
            np.testing.assert_array_equal(t1.value, t2.value)

    def test_leaf_value_is_mean_of_targets(self):
        t = make_table(n=50, p=2, seed=18)
        model = rf_fit(t, ForestParams(n_trees=1, bootstrap=False, mtry=2,
                                       min_leaf=5), seed=0)
        tree = model.trees[0]
        # root value must equal the full-sample mean
        assert tree.value[0] == pytest.approx(t.y.mean(), abs=1e-12)
        # every split's cover splits exactly
        for i in range(tree.n_nodes):
            if tree.feature[i] != -1:
                assert tree.cover[i] == tree.cover[tree.left[i]] + tree.cover[tree.right[i]]
