import numpy as np
import pytest

from geodemand.spatial import GeodemandError
from geodemand.table import FeatureTable, ZeroVarianceError


def make_table(n=20, p=3, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    return FeatureTable(
        station_ids=np.arange(n),
        locations=rng.uniform(0, 1000, size=(n, 2)),
        X=X,
        columns=tuple(f"f{j}" for j in range(p)),
        y=rng.normal(10, 3, size=n),
        units={f"f{j}": "z" for j in range(p)},
    )


class TestStandardize:
    def test_two_point_column_population_std(self):
        t = FeatureTable(
            station_ids=[0, 1],
            locations=[(0, 0), (1, 1)],
            X=np.array([[0.0], [2.0]]),
            columns=("a",),
            y=np.array([1.0, 3.0]),
        )
        s = t.standardize()
        assert s.X[:, 0] == pytest.approx([-1.0, 1.0])
        assert s.y == pytest.approx([-1.0, 1.0])

    def test_standardized_moments(self):
        s = make_table().standardize()
        assert np.all(np.abs(s.X.mean(axis=0)) < 1e-9)
        assert np.all(np.abs(s.X.std(axis=0) - 1) < 1e-9)
        assert abs(s.y.mean()) < 1e-9
        assert abs(s.y.std() - 1) < 1e-9

    def test_idempotent_within_tolerance(self):
        s = make_table().standardize()
        ss = s.standardize()
        assert np.max(np.abs(ss.X - s.X)) < 1e-12
        assert np.max(np.abs(ss.y - s.y)) < 1e-12

    def test_round_trip(self):
        t = make_table(seed=3)
        back = t.standardize().destandardize()
        assert np.max(np.abs(back.X - t.X)) < 1e-10
        assert np.max(np.abs(back.y - t.y)) < 1e-10

    def test_zero_variance_named(self):
        t = make_table()
        X = t.X.copy()
        X[:, 1] = 7.0
        bad = FeatureTable(station_ids=t.station_ids, locations=t.locations,
                           X=X, columns=t.columns, y=t.y)
        with pytest.raises(ZeroVarianceError) as err:
            bad.standardize()
        assert err.value.columns == ["f1"]

    def test_apply_training_record_to_new_rows(self):
        t = make_table(n=30, seed=5)
        train, test = t.subset(np.arange(20)), t.subset(np.arange(20, 30))
        strain = train.standardize()
        stest = test.apply_standardization(strain.standardization)
        back = stest.destandardize()
        assert np.max(np.abs(back.X - test.X)) < 1e-10


class TestValidation:
    def test_missing_values_rejected(self):
        t = make_table()
        X = t.X.copy()
        X[0, 0] = np.nan
        with pytest.raises(GeodemandError, match="missing"):
            FeatureTable(station_ids=t.station_ids, locations=t.locations,
                         X=X, columns=t.columns, y=t.y)

    def test_duplicate_columns_rejected(self):
        t = make_table(p=2)
        with pytest.raises(GeodemandError, match="duplicate"):
            FeatureTable(station_ids=t.station_ids, locations=t.locations,
                         X=t.X, columns=("a", "a"), y=t.y)

    def test_row_mismatch_rejected(self):
        t = make_table()
        with pytest.raises(GeodemandError, match="mismatch"):
            FeatureTable(station_ids=t.station_ids, locations=t.locations,
                         X=t.X[:-1], columns=t.columns, y=t.y)


class TestCoordinates:
    def test_with_coordinates_appends_columns(self):
        t = make_table()
        tc = t.with_coordinates()
        assert tc.columns[-2:] == ("x_m", "y_m")
        assert np.array_equal(tc.X[:, -2:], t.locations)
        assert tc.uses_coordinates
        assert tc.with_coordinates() is tc


class TestPersistence:
    def test_csv_round_trip(self, tmp_path):
        t = make_table(seed=9)
        path = tmp_path / "features.csv"
        t.to_csv(path)
        back = FeatureTable.from_csv(path)
        assert back.columns == t.columns
        assert np.max(np.abs(back.X - t.X)) < 1e-12
        assert np.max(np.abs(back.y - t.y)) < 1e-12
        assert back.units == t.units

    def test_csv_round_trip_standardized(self, tmp_path):
        t = make_table(seed=10).standardize()
        path = tmp_path / "features.csv"
        t.to_csv(path)
        back = FeatureTable.from_csv(path)
        assert back.standardization is not None
        assert np.max(np.abs(back.standardization.x_mean - t.standardization.x_mean)) == 0
        restored = back.destandardize()
        original = t.destandardize()
        assert np.max(np.abs(restored.X - original.X)) < 1e-10

    def test_subset_and_select(self):
        t = make_table(n=10, p=3)
        sub = t.subset([0, 2, 4]).select(["f2", "f0"])
        assert sub.n == 3
        assert sub.columns == ("f2", "f0")
        assert sub.X[:, 0] == pytest.approx(t.X[[0, 2, 4], 2])
