"""Record real service responses as UI test fixtures.

Builds the synthetic preset dataset, fits GWR / RF / RF-with-coordinates
bundles via the CLI, starts the service in-process, and snapshots:
stations.json, three what-if scenarios (urban / intermediate / rural
locations on the synthetic preset), an error response, and the GWR + MGWR
coefficient-export CSVs.
"""

import json
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
from fastapi.testclient import TestClient

from geodemand.bundle import load_bundle
from geodemand.data_io import load_layers
from geodemand.service import create_app
from geodemand.table import FeatureTable

HERE = Path(__file__).resolve().parent
FIXTURES = HERE.parent / "tests" / "fixtures"
FIXTURES.mkdir(parents=True, exist_ok=True)


def cli(*args):
    subprocess.run([sys.executable, "-m", "geodemand.cli", *args], check=True)


def main():
    work = Path(tempfile.mkdtemp(prefix="geodemand-fixtures-"))
    data = work / "data"
    cli("synth", "--preset", "raw", "--n", "60", "--seed", "11", "--out", str(data))
    features = work / "features.csv"
    cli("fuse", "--manifest", str(data / "manifest.txt"), "--out", str(features))
    cli("fit", "--features", str(features), "--model", "gwr",
        "--kernel", "exponential", "--bandwidth", "fixed:auto",
        "--criterion", "aicc", "--out", str(work / "gwr.json"),
        "--coefficients", str(FIXTURES / "coefficients_gwr.csv"))
    cli("fit", "--features", str(features), "--model", "mgwr",
        "--kernel", "bisquare", "--out", str(work / "mgwr.json"),
        "--coefficients", str(FIXTURES / "coefficients_mgwr.csv"))
    cli("fit", "--features", str(features), "--model", "rf_coords",
        "--trees", "60", "--min-leaf", "3", "--out", str(work / "rf_coords.json"))

    table = FeatureTable.from_csv(features)
    layers = load_layers(data / "manifest.txt")
    bundles = {name: load_bundle(work / f"{name}.json")
               for name in ("gwr", "rf_coords")}
    app = create_app(bundles, table, data=layers,
                     fusion_config=layers["config"])
    client = TestClient(app)

    (FIXTURES / "stations.json").write_text(
        json.dumps(client.get("/v1/stations").json(), indent=1))
    (FIXTURES / "health.json").write_text(
        json.dumps(client.get("/v1/health").json(), indent=1))

    # urban = densest 3 km neighborhood, rural = most isolated station,
    # intermediate = median neighborhood size
    locs = table.locations
    counts = np.array([
        int(((np.linalg.norm(locs - locs[i], axis=1)) <= 3000).sum())
        for i in range(table.n)])
    urban = int(counts.argmax())
    rural = int(counts.argmin())
    intermediate = int(np.argsort(counts)[len(counts) // 2])
    scenarios = {"urban": urban, "intermediate": intermediate, "rural": rural}
    for name, idx in scenarios.items():
        body = {"x_m": float(locs[idx, 0]) + 120.0,
                "y_m": float(locs[idx, 1]) - 80.0,
                "supply_min": 1, "supply_max": 20,
                "models": ["gwr", "rf_coords"], "mode": "auto_fuse"}
        r = client.post("/v1/whatif", json=body)
        assert r.status_code == 200, r.text
        (FIXTURES / f"whatif_{name}.json").write_text(
            json.dumps({"request": body, "response": r.json()}, indent=1))

    err = client.post("/v1/whatif", json={"x_m": 0.0, "y_m": 0.0,
                                          "supply_min": 1, "supply_max": 5,
                                          "models": ["ghost"]})
    (FIXTURES / "whatif_error.json").write_text(
        json.dumps({"status": err.status_code, "body": err.json()}, indent=1))

    print("fixtures written to", FIXTURES)
    shutil.rmtree(work)


if __name__ == "__main__":
    main()
