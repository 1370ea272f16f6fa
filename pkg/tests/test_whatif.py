import numpy as np
import pytest

from geodemand.bundle import bundle_from_state
from geodemand.forest import ForestParams
from geodemand.pipeline import ModelConfig, ModelPipeline
from geodemand.spatial import BandwidthSpec, GeodemandError, UnfittedModelError
from geodemand.synth import ORIGIN, synth_saturating_supply
from geodemand.whatif import neighborhood_stats, outside_hull, whatif_curves


@pytest.fixture(scope="module")
def table():
    return synth_saturating_supply(n=600, seed=3)


@pytest.fixture(scope="module")
def bundles(table):
    gwr = ModelPipeline(ModelConfig(kind="gwr", kernel="gaussian",
                                    bandwidth=BandwidthSpec.fixed(30_000.0))).fit(table)
    rf = ModelPipeline(ModelConfig(
        kind="rf", forest=ForestParams(n_trees=40, mtry=2, min_leaf=2))).fit(table)
    return {"gwr": bundle_from_state(gwr), "rf": bundle_from_state(rf)}


def center(table):
    return table.locations.mean(axis=0)


class TestCurves:
    def test_gwr_curve_affine(self, table, bundles):
        res = whatif_curves({"gwr": bundles["gwr"]}, center(table),
                            {"f1": 0.0}, range(1, 21), table)
        d = np.diff(res.curves[0].demand_trips_per_month)
        assert np.max(np.abs(d - d[0])) < 1e-9

    def test_rf_curve_bounded_by_training_max(self, table, bundles):
        res = whatif_curves({"rf": bundles["rf"]}, center(table),
                            {"f1": 0.0}, range(1, 21), table)
        assert max(res.curves[0].demand_trips_per_month) <= table.y.max() + 1e-9

    def test_rf_increments_shrink_past_knee(self, table, bundles):
        res = whatif_curves({"rf": bundles["rf"]}, center(table),
                            {"f1": 0.0}, range(1, 21), table)
        curve = np.asarray(res.curves[0].demand_trips_per_month)
        inc = np.diff(curve)
        knee = int(table.metadata["knee_cars"])
        past = inc[knee:]
        assert np.all(np.diff(past) <= 1e-9)

    def test_curve_length_matches_range(self, table, bundles):
        res = whatif_curves(bundles, center(table), {"f1": 0.0},
                            range(1, 13), table)
        for c in res.curves:
            assert len(c.supply_cars) == 12
            assert len(c.demand_trips_per_month) == 12

    def test_mgwr_refused(self, table, bundles):
        class FakeMGWR:
            kind = "mgwr"
            fusion_fingerprint = None

        with pytest.raises(UnfittedModelError, match="MGWR"):
            whatif_curves({"m": FakeMGWR()}, center(table), {"f1": 0.0},
                          range(1, 5), table)

    def test_empty_range_rejected(self, table, bundles):
        with pytest.raises(GeodemandError, match="empty"):
            whatif_curves(bundles, center(table), {"f1": 0.0}, [], table)


class TestNeighborhood:
    def test_existing_station_included_at_zero_distance(self, table):
        i = 7
        stats = neighborhood_stats(table, table.locations[i])
        assert stats.station_count >= 1
        ids_demand = []
        d = np.linalg.norm(table.locations - table.locations[i], axis=1)
        members = np.flatnonzero(d <= 3000.0)
        assert i in members
        assert stats.station_count == len(members)
        assert stats.mean_demand_trips_per_month == pytest.approx(
            float(table.y[members].mean()))

    def test_largest_station_by_supply(self, table):
        i = 11
        stats = neighborhood_stats(table, table.locations[i])
        d = np.linalg.norm(table.locations - table.locations[i], axis=1)
        members = np.flatnonzero(d <= 3000.0)
        supply = table.column("supply_cars")[members]
        best = members[np.lexsort((members, -supply))[0]]
        assert stats.largest_station["station_id"] == str(table.station_ids[best])
        assert stats.largest_station["supply_cars"] == float(
            table.column("supply_cars")[best])

    def test_empty_neighborhood(self, table):
        stats = neighborhood_stats(table, np.asarray(ORIGIN) - 1e6)
        assert stats.station_count == 0
        assert stats.largest_station is None


class TestHull:
    def test_inside_and_outside(self, table):
        assert not outside_hull(table, center(table))
        assert outside_hull(table, np.asarray(ORIGIN) - 1e6)

    def test_extrapolation_flag_set(self, table, bundles):
        res = whatif_curves(bundles, np.asarray(ORIGIN) - 1e6, {"f1": 0.0},
                            range(1, 4), table)
        assert res.extrapolation_warning
