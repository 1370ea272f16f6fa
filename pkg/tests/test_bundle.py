import json

import numpy as np
import pytest

from geodemand.bundle import (
    BundleFormatError,
    SchemaMismatchError,
    bundle_from_state,
    load_bundle,
    save_bundle,
)
from geodemand.forest import ForestParams
from geodemand.pipeline import ModelConfig, ModelPipeline, predict_table
from geodemand.spatial import BandwidthSpec, UnfittedModelError
from geodemand.synth import preset_uniform, synth_generate

FOREST = ForestParams(n_trees=5, min_leaf=3)

CONFIGS = {
    "ols": ModelConfig(kind="ols"),
    "gwr": ModelConfig(kind="gwr", kernel="gaussian",
                       bandwidth=BandwidthSpec.fixed(30_000.0)),
    "mgwr": ModelConfig(kind="mgwr", kernel="bisquare"),
    "rf": ModelConfig(kind="rf", forest=FOREST),
    "rf_coords": ModelConfig(kind="rf_coords", forest=FOREST),
    "grf": ModelConfig(kind="grf", forest=FOREST, grf_k=20),
}


@pytest.fixture(scope="module")
def table():
    t, _ = synth_generate(preset_uniform(n=60, p=3), seed=0)
    return t


@pytest.fixture(scope="module")
def fitted(table):
    return {kind: ModelPipeline(cfg).fit(table) for kind, cfg in CONFIGS.items()}


@pytest.mark.parametrize("kind", list(CONFIGS))
class TestRoundTrip:
    def test_save_load_save_byte_identical(self, kind, fitted, tmp_path):
        bundle = bundle_from_state(fitted[kind])
        p1 = tmp_path / "a.json"
        p2 = tmp_path / "b.json"
        save_bundle(bundle, p1)
        loaded = load_bundle(p1)
        save_bundle(loaded, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_predictions_survive_round_trip(self, kind, fitted, table, tmp_path):
        state = fitted[kind]
        bundle = bundle_from_state(state)
        path = tmp_path / "m.json"
        save_bundle(bundle, path)
        loaded = load_bundle(path)
        if kind == "mgwr":
            np.testing.assert_array_equal(loaded.state.model.beta,
                                          state.model.beta)
            assert loaded.state.model.trS == state.model.trS
            return
        before = predict_table(state, table)
        after = predict_table(loaded.state, table)
        finite = np.isfinite(before)
        assert np.max(np.abs(before[finite] - after[finite])) <= 1e-12


class TestFormatGuard:
    def test_version_mismatch_rejected(self, fitted, tmp_path):
        bundle = bundle_from_state(fitted["ols"])
        path = tmp_path / "m.json"
        save_bundle(bundle, path)
        doc = json.loads(path.read_text())
        doc["format_version"] = 99
        path.write_text(json.dumps(doc))
        with pytest.raises(BundleFormatError, match="99"):
            load_bundle(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_bundle(tmp_path / "ghost.json")


class TestPredictRows:
    def test_rows_match_matrix_path(self, fitted, table, tmp_path):
        state = fitted["gwr"]
        bundle = bundle_from_state(state)
        rows = []
        for i in range(4):
            row = {c: float(table.X[i, j]) for j, c in enumerate(table.columns)}
            row["x_m"], row["y_m"] = map(float, table.locations[i])
            rows.append(row)
        got = bundle.predict_rows(rows)
        expect = predict_table(state, table.subset(np.arange(4)))
        np.testing.assert_allclose(got, expect, atol=1e-12)

    def test_missing_feature_schema_error(self, fitted):
        bundle = bundle_from_state(fitted["rf"])
        with pytest.raises(SchemaMismatchError, match="missing"):
            bundle.predict_rows([{"f1": 1.0}])

    def test_gwr_needs_location(self, fitted):
        bundle = bundle_from_state(fitted["gwr"])
        with pytest.raises(SchemaMismatchError):
            bundle.predict_rows([{"f1": 0.0, "f2": 0.0, "f3": 0.0}])

    def test_mgwr_prediction_refused(self, fitted):
        bundle = bundle_from_state(fitted["mgwr"])
        with pytest.raises(UnfittedModelError, match="MGWR"):
            bundle.predict_rows([{"f1": 0.0, "f2": 0.0, "f3": 0.0,
                                  "x_m": 0.0, "y_m": 0.0}])

    def test_rf_coords_needs_coordinates_in_rows(self, fitted, table):
        bundle = bundle_from_state(fitted["rf_coords"])
        row = {c: 0.0 for c in table.columns}
        with pytest.raises(SchemaMismatchError, match="x_m"):
            bundle.predict_rows([row])
        row.update({"x_m": float(table.locations[0, 0]),
                    "y_m": float(table.locations[0, 1])})
        assert np.isfinite(bundle.predict_rows([row])[0])


class TestMetadata:
    def test_created_and_fingerprint_preserved(self, fitted, tmp_path):
        bundle = bundle_from_state(fitted["ols"], units={"f1": "z"},
                                   fusion_fingerprint="cafebabe")
        path = tmp_path / "m.json"
        save_bundle(bundle, path)
        loaded = load_bundle(path)
        assert loaded.created == bundle.created
        assert loaded.fusion_fingerprint == "cafebabe"
        assert loaded.units == {"f1": "z"}
