import numpy as np
import pytest

from geodemand.selection import (
    CollinearityReport,
    GeodemandError,
    kkt_residuals,
    lasso_fit,
    lasso_lambda_max,
    lasso_path,
    lasso_select,
    local_collinearity,
    remove_collinear,
)
from geodemand.spatial import BandwidthSpec, Kernel
from geodemand.table import FeatureTable


def random_problem(n=200, p=10, seed=0, sigma=0.5):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    X = (X - X.mean(axis=0)) / X.std(axis=0)
    beta = np.zeros(p)
    beta[:3] = [3.0, -2.0, 1.0]
    y = X @ beta + rng.normal(0, sigma, n)
    return X, y


def objective(X, y, lam, b0, beta):
    r = y - b0 - X @ beta
    return 0.5 * float(r @ r) + lam * float(np.abs(beta).sum())


def subgradient_oracle(X, y, lam, n_iter):
    """Projected-subgradient descent on the same objective, equal budget."""
    n, p = X.shape
    beta = np.zeros(p)
    b0 = float(y.mean())
    L = np.linalg.norm(X, ord=2) ** 2
    best = objective(X, y, lam, b0, beta)
    for t in range(1, n_iter + 1):
        r = y - b0 - X @ beta
        g = -X.T @ r + lam * np.sign(beta)
        g0 = -r.sum()
        step = 1.0 / (L + t)
        beta = beta - step * g
        b0 = b0 - step * g0 / n
        best = min(best, objective(X, y, lam, b0, beta))
    return best


class TestLassoFit:
    def test_lambda_zero_equals_ols(self):
        X, y = random_problem()
        fit = lasso_fit(X, y, 0.0)
        A = np.column_stack([np.ones(len(y)), X])
        ols = np.linalg.lstsq(A, y, rcond=None)[0]
        assert fit.intercept == pytest.approx(ols[0], abs=1e-6)
        np.testing.assert_allclose(fit.coefficients, ols[1:], atol=1e-6)

    def test_lambda_max_all_zero(self):
        X, y = random_problem(seed=1)
        lam_max = lasso_lambda_max(X, y)
        for lam in (lam_max, 1.5 * lam_max):
            fit = lasso_fit(X, y, lam)
            assert np.all(fit.coefficients == 0.0)
            assert fit.intercept == pytest.approx(y.mean(), abs=1e-9)

    def test_kkt_residuals_small(self):
        X, y = random_problem(seed=2)
        lam = 0.3 * lasso_lambda_max(X, y)
        fit = lasso_fit(X, y, lam)
        assert kkt_residuals(X, y, fit).max() < 1e-6

    def test_beats_subgradient_oracle_at_equal_budget(self):
        X, y = random_problem(n=200, p=10, seed=3)
        lam = 0.3 * lasso_lambda_max(X, y)
        fit = lasso_fit(X, y, lam)
        ours = objective(X, y, lam, fit.intercept, fit.coefficients)
        oracle = subgradient_oracle(X, y, lam, n_iter=max(fit.n_iterations, 200))
        assert ours <= oracle + 1e-9

    def test_non_finite_rejected(self):
        X, y = random_problem()
        X[0, 0] = np.inf
        with pytest.raises(GeodemandError):
            lasso_fit(X, y, 1.0)


class TestLassoPath:
    def test_kkt_along_path(self):
        X, y = random_problem(seed=4)
        lams, fits = lasso_path(X, y, n_points=100)
        worst = max(kkt_residuals(X, y, f).max() for f in fits)
        assert worst < 1e-6

    def test_monotone_sparsity(self):
        X, y = random_problem(n=300, p=8, seed=5, sigma=0.2)
        lams, fits = lasso_path(X, y, n_points=60)
        nnz = [int(np.count_nonzero(f.coefficients)) for f in fits]
        # lams descend, so nonzeros must be non-decreasing in path order
        assert all(a <= b for a, b in zip(nnz, nnz[1:]))


def selection_table(n=500, p_noise=10, seed=0, sigma=0.05):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p_noise + 1))
    y = 2.5 * X[:, 0] + rng.normal(0, sigma, n)
    cols = ("true",) + tuple(f"noise{j}" for j in range(p_noise))
    t = FeatureTable(station_ids=np.arange(n),
                     locations=rng.uniform(0, 10_000, size=(n, 2)),
                     X=X, columns=cols, y=y)
    return t.standardize()


class TestLassoSelect:
    def test_recovers_true_predictor_and_drops_noise(self):
        hits, dropped = 0, []
        for seed in range(20):
            t = selection_table(seed=seed)
            res = lasso_select(t, k_folds=10, seed=seed, n_points=100)
            hits += "true" in res.selected
            noise = [c for c in t.columns if c.startswith("noise")]
            dropped.append(np.mean([c not in res.selected for c in noise]))
        assert hits == 20
        assert np.mean(dropped) >= 0.8

    def test_manual_include_union(self):
        t = selection_table(seed=1)
        res = lasso_select(t, k_folds=5, seed=0, n_points=40,
                           manual_include=("noise3",))
        assert "noise3" in res.selected
        assert res.labels["noise3"] in ("manual", "lasso")

    def test_manual_exclude(self):
        t = selection_table(seed=2)
        res = lasso_select(t, k_folds=5, seed=0, n_points=40,
                           manual_exclude=("true",))
        assert "true" not in res.selected

    def test_unknown_manual_name(self):
        t = selection_table(seed=3)
        with pytest.raises(GeodemandError, match="unknown feature"):
            lasso_select(t, manual_include=("ghost",))

    def test_deterministic_given_seed(self):
        t = selection_table(seed=4)
        a = lasso_select(t, k_folds=5, seed=9, n_points=40)
        b = lasso_select(t, k_folds=5, seed=9, n_points=40)
        assert a.selected == b.selected and a.lam == b.lam

    def test_labels_cover_three_states(self):
        t = selection_table(seed=5)
        res = lasso_select(t, k_folds=5, seed=0, n_points=40)
        assert set(res.labels.values()) <= {"lasso", "manual", "not_selected"}


def table_from(X, seed=0):
    rng = np.random.default_rng(seed)
    n, p = X.shape
    return FeatureTable(station_ids=np.arange(n),
                        locations=rng.uniform(0, 1000, size=(n, 2)),
                        X=X, columns=tuple(f"f{j}" for j in range(p)),
                        y=rng.normal(size=n))


WIDE_BOXCAR = BandwidthSpec.fixed(1e9)


class TestLocalCollinearity:
    def test_orthonormal_design_unit_vif_cn(self):
        rng = np.random.default_rng(0)
        q, _ = np.linalg.qr(rng.normal(size=(60, 3)))
        report = local_collinearity(table_from(q), Kernel.BOXCAR, WIDE_BOXCAR)
        np.testing.assert_allclose(report.condition_number, 1.0, atol=1e-9)

    def test_duplicated_column_flagged_inf(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(50, 1))
        X = np.hstack([x, x, rng.normal(size=(50, 1))])
        report = local_collinearity(table_from(X), Kernel.BOXCAR, WIDE_BOXCAR)
        assert np.isinf(report.vif).any()
        assert "f0" in report.flagged and "f1" in report.flagged

    def test_bivariate_closed_form(self):
        # construct two columns with empirical correlation exactly 0.95
        rng = np.random.default_rng(2)
        z = rng.normal(size=500)
        z = (z - z.mean()) / z.std()
        e = rng.normal(size=500)
        e = e - z * (z @ e) / (z @ z)
        e = (e - e.mean()) / e.std()
        x2 = 0.95 * z + np.sqrt(1 - 0.95**2) * e
        X = np.column_stack([z, x2])
        assert np.corrcoef(z, x2)[0, 1] == pytest.approx(0.95, abs=1e-12)
        report = local_collinearity(table_from(X), Kernel.BOXCAR, WIDE_BOXCAR)
        np.testing.assert_allclose(report.vif, 1.0 / (1.0 - 0.95**2), rtol=0.01)

    def test_vif_scale_invariance(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(40, 3))
        X[:, 1] = 0.8 * X[:, 0] + 0.3 * X[:, 1]
        t1 = table_from(X.copy())
        X2 = X.copy()
        X2[:, 1] *= 1234.5
        t2 = table_from(X2)
        bw = BandwidthSpec.fixed(500.0)
        a = local_collinearity(t1, Kernel.GAUSSIAN, bw)
        b = local_collinearity(t2, Kernel.GAUSSIAN, bw)
        np.testing.assert_allclose(a.vif, b.vif, atol=1e-9)

    def test_vif_at_least_one(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(30, 4))
        report = local_collinearity(table_from(X), Kernel.GAUSSIAN,
                                    BandwidthSpec.fixed(300.0))
        finite = report.vif[np.isfinite(report.vif)]
        assert np.all(finite >= 1.0)

    def test_needs_two_features(self):
        rng = np.random.default_rng(5)
        with pytest.raises(GeodemandError):
            local_collinearity(table_from(rng.normal(size=(20, 1))),
                               Kernel.BOXCAR, WIDE_BOXCAR)


class TestRemoveCollinear:
    def test_removes_weakest_duplicate(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(80, 1))
        X = np.hstack([x, x + rng.normal(0, 1e-8, size=(80, 1)),
                       rng.normal(size=(80, 2))])
        t = table_from(X)
        removed, report = remove_collinear(
            t, Kernel.BOXCAR, WIDE_BOXCAR,
            lasso_coefficients={"f0": 2.0, "f1": 0.1, "f2": 1.0, "f3": 0.5})
        assert "f1" in removed
        assert not report.flagged
