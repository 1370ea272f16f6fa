import numpy as np
import pytest
from fastapi.testclient import TestClient

from geodemand.bundle import bundle_from_state
from geodemand.forest import ForestParams
from geodemand.fusion import FusionConfig, clean_trips, compute_demand, fuse_features
from geodemand.pipeline import ModelConfig, ModelPipeline
from geodemand.service import create_app
from geodemand.spatial import BandwidthSpec
from geodemand.synth import synth_raw_layout

CFG = FusionConfig()


@pytest.fixture(scope="module")
def setup():
    layout = synth_raw_layout(n_stations=40, seed=21)
    kept, _ = clean_trips(layout["trips"], CFG)
    demand = compute_demand(kept, layout["stations"], layout["window"])
    table = fuse_features(layout["stations"], layout["pois"], layout["census"],
                          layout["households"], demand, CFG)
    gwr = ModelPipeline(ModelConfig(kind="gwr", kernel="exponential",
                                    bandwidth=BandwidthSpec.fixed(15_000.0))).fit(table)
    rf = ModelPipeline(ModelConfig(
        kind="rf", forest=ForestParams(n_trees=20, min_leaf=3))).fit(table)
    mgwr_cfg = ModelConfig(kind="mgwr", kernel="bisquare")
    bundles = {
        "gwr": bundle_from_state(gwr, fusion_fingerprint=CFG.fingerprint()),
        "rf": bundle_from_state(rf, fusion_fingerprint=CFG.fingerprint()),
        "mgwr": bundle_from_state(ModelPipeline(mgwr_cfg).fit(table)),
    }
    app = create_app(bundles, table, data=layout, fusion_config=CFG)
    return layout, table, bundles, TestClient(app)


class TestHealthAndStations:
    def test_health(self, setup):
        _, table, bundles, client = setup
        r = client.get("/v1/health")
        assert r.status_code == 200
        body = r.json()
        assert body["status"] == "ok"
        assert body["models"] == {"gwr": "gwr", "rf": "rf", "mgwr": "mgwr"}
        assert body["n_stations"] == table.n

    def test_stations_with_cells(self, setup):
        _, table, _, client = setup
        body = client.get("/v1/stations").json()
        assert len(body["stations"]) == table.n
        first = body["stations"][0]
        assert {"station_id", "x_m", "y_m", "supply_cars",
                "demand_trips_per_month", "voronoi_cell"} <= set(first)
        assert len(first["voronoi_cell"]) >= 3
        assert len(body["boundary"]) >= 3


class TestPredict:
    def rows(self, table, n=3):
        out = []
        for i in range(n):
            row = {c: float(table.X[i, j]) for j, c in enumerate(table.columns)}
            row["x_m"], row["y_m"] = map(float, table.locations[i])
            out.append(row)
        return out

    def test_training_rows_reproduce_fitted(self, setup):
        _, table, bundles, client = setup
        r = client.post("/v1/predict", json={"model": "gwr",
                                             "rows": self.rows(table)})
        assert r.status_code == 200
        got = np.asarray(r.json()["predictions_trips_per_month"])
        rec = bundles["gwr"].state.standardization
        fitted = bundles["gwr"].state.model.fitted[:3] * rec.y_std + rec.y_mean
        np.testing.assert_allclose(got, fitted, atol=1e-9)

    def test_unknown_model_404(self, setup):
        _, table, _, client = setup
        r = client.post("/v1/predict", json={"model": "ghost",
                                             "rows": self.rows(table, 1)})
        assert r.status_code == 404

    def test_schema_violation_400(self, setup):
        _, _, _, client = setup
        r = client.post("/v1/predict", json={"model": "rf",
                                             "rows": [{"nope": 1.0}]})
        assert r.status_code == 400
        r2 = client.post("/v1/predict", json={"rows": []})
        assert r2.status_code == 400

    def test_mgwr_422(self, setup):
        _, table, _, client = setup
        r = client.post("/v1/predict", json={"model": "mgwr",
                                             "rows": self.rows(table, 1)})
        assert r.status_code == 422
        assert "out-of-sample" in r.json()["detail"]


class TestWhatIf:
    def body(self, table, **kw):
        loc = table.locations.mean(axis=0)
        base = {"x_m": float(loc[0]), "y_m": float(loc[1]),
                "supply_min": 1, "supply_max": 8, "models": ["gwr", "rf"]}
        base.update(kw)
        return base

    def test_auto_fuse_curves(self, setup):
        _, table, _, client = setup
        r = client.post("/v1/whatif", json=self.body(table))
        assert r.status_code == 200
        body = r.json()
        assert body["mode"] == "auto_fuse"
        assert len(body["curves"]) == 2
        for curve in body["curves"]:
            assert len(curve["supply_cars"]) == 8
            assert len(curve["demand_trips_per_month"]) == 8
        assert body["neighborhood_3km"]["station_count"] >= 0
        assert body["fusion_fingerprint"] == CFG.fingerprint()

    def test_gwr_curve_affine(self, setup):
        _, table, _, client = setup
        r = client.post("/v1/whatif", json=self.body(table, models=["gwr"],
                                                     supply_max=12))
        curve = r.json()["curves"][0]["demand_trips_per_month"]
        d = np.diff(curve)
        assert np.max(np.abs(d - d[0])) < 1e-9

    def test_fixed_features_mode(self, setup):
        _, table, _, client = setup
        base_features = {c: float(np.median(table.X[:, j]))
                         for j, c in enumerate(table.columns)}
        r = client.post("/v1/whatif", json=self.body(
            table, mode="fixed_features", base_features=base_features))
        assert r.status_code == 200
        assert r.json()["mode"] == "fixed_features"

    def test_fixed_features_without_base_400(self, setup):
        _, table, _, client = setup
        r = client.post("/v1/whatif", json=self.body(table, mode="fixed_features"))
        assert r.status_code == 400

    def test_unknown_model_404(self, setup):
        _, table, _, client = setup
        r = client.post("/v1/whatif", json=self.body(table, models=["nope"]))
        assert r.status_code == 404

    def test_mgwr_in_request_422(self, setup):
        _, table, _, client = setup
        r = client.post("/v1/whatif", json=self.body(table, models=["mgwr"]))
        assert r.status_code == 422

    def test_outside_hull_warning_flag(self, setup):
        _, table, _, client = setup
        r = client.post("/v1/whatif", json=self.body(
            table, x_m=float(table.locations[:, 0].min() - 5_000.0),
            y_m=float(table.locations[:, 1].min() - 5_000.0), models=["rf"]))
        assert r.status_code == 200
        assert r.json()["extrapolation_warning"] is True

    def test_strict_hull_422(self, setup):
        layout, table, bundles, _ = setup
        strict_app = create_app({"rf": bundles["rf"]}, table, data=layout,
                                fusion_config=CFG, strict_hull=True)
        client = TestClient(strict_app)
        r = client.post("/v1/whatif", json=self.body(
            table, x_m=float(table.locations[:, 0].min() - 5_000.0),
            y_m=float(table.locations[:, 1].min() - 5_000.0), models=["rf"]))
        assert r.status_code == 422

    def test_identical_requests_identical_bodies(self, setup):
        _, table, _, client = setup
        a = client.post("/v1/whatif", json=self.body(table)).content
        b = client.post("/v1/whatif", json=self.body(table)).content
        assert a == b
