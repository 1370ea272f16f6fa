"""HTTP prediction service: /v1/health, /v1/stations, /v1/predict,
/v1/whatif.

Loaded bundles and the fused station table are immutable shared state;
every request is a pure function of them, so identical requests return
identical bodies. JSON field names carry units (supply_cars,
demand_trips_per_month). Schema violations return 400, unknown models 404,
unsupported model kinds and out-of-hull candidates (in strict mode) 422.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import __version__
from .bundle import ModelBundle, SchemaMismatchError
from .fusion import FusionConfig, fuse_candidate
from .spatial import GeodemandError
from .table import FeatureTable
from .voronoi import build_voronoi
from .whatif import outside_hull, whatif_curves


class PredictRequest(BaseModel):
    model: str
    rows: list[dict[str, float]]


class WhatIfBody(BaseModel):
    x_m: float
    y_m: float
    supply_min: int = 1
    supply_max: int = 20
    models: list[str] | None = None
    mode: str = "auto_fuse"  # "auto_fuse" | "fixed_features"
    base_features: dict[str, float] | None = None


@dataclass
class ServiceState:
    bundles: dict[str, ModelBundle]
    table: FeatureTable
    data: dict | None = None  # raw layers for auto-fuse
    fusion_config: FusionConfig | None = None
    strict_hull: bool = False
    _partition_cache: Any = field(default=None, repr=False)

    def partition(self):
        if self._partition_cache is None:
            boundary = self.table.metadata.get("boundary_vertices")
            self._partition_cache = build_voronoi(self.table.locations,
                                                  boundary=boundary)
        return self._partition_cache


def create_app(bundles: dict[str, ModelBundle], table: FeatureTable,
               data: dict | None = None,
               fusion_config: FusionConfig | None = None,
               strict_hull: bool = False,
               ui_dir: str | None = None) -> FastAPI:
    if not bundles:
        raise GeodemandError("service needs at least one model bundle")
    state = ServiceState(bundles=bundles, table=table, data=data,
                         fusion_config=fusion_config, strict_hull=strict_hull)
    app = FastAPI(title="geodemand", version=__version__)
    app.state.geodemand = state

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc):
        return JSONResponse(status_code=400,
                            content={"error": "schema", "detail": str(exc)})

    @app.get("/v1/health")
    def health():
        return {
            "status": "ok",
            "toolkit_version": __version__,
            "models": {name: b.kind for name, b in state.bundles.items()},
            "n_stations": state.table.n,
        }

    @app.get("/v1/stations")
    def stations():
        t = state.table
        part = state.partition()
        supply = (t.column("supply_cars") if "supply_cars" in t.columns
                  else [None] * t.n)
        out = []
        for i in range(t.n):
            out.append({
                "station_id": str(t.station_ids[i]),
                "x_m": float(t.locations[i, 0]),
                "y_m": float(t.locations[i, 1]),
                "supply_cars": None if supply[i] is None else float(supply[i]),
                "demand_trips_per_month": float(t.y[i]),
                "voronoi_cell": [[float(x), float(y)] for x, y in part.cells[i]],
            })
        return {"stations": out,
                "boundary": [[float(x), float(y)] for x, y in part.boundary]}

    @app.post("/v1/predict")
    def predict(body: PredictRequest):
        bundle = state.bundles.get(body.model)
        if bundle is None:
            return JSONResponse(status_code=404, content={
                "error": "unknown-model", "detail": f"no bundle named "
                f"{body.model!r}; loaded: {sorted(state.bundles)}"})
        if bundle.kind == "mgwr":
            return JSONResponse(status_code=422, content={
                "error": "unsupported-model",
                "detail": "MGWR does not support out-of-sample prediction"})
        try:
            pred = bundle.predict_rows(body.rows)
        except SchemaMismatchError as e:
            return JSONResponse(status_code=400,
                                content={"error": "schema", "detail": str(e)})
        return {"model": body.model,
                "predictions_trips_per_month": [float(p) for p in pred]}

    @app.post("/v1/whatif")
    def whatif(body: WhatIfBody):
        names = body.models if body.models is not None else [
            n for n, b in state.bundles.items() if b.kind != "mgwr"]
        unknown = [n for n in names if n not in state.bundles]
        if unknown:
            return JSONResponse(status_code=404, content={
                "error": "unknown-model", "detail": f"no bundle(s) {unknown}"})
        mgwr = [n for n in names if state.bundles[n].kind == "mgwr"]
        if mgwr:
            return JSONResponse(status_code=422, content={
                "error": "unsupported-model",
                "detail": f"MGWR does not support out-of-sample prediction: {mgwr}"})
        if body.supply_max < body.supply_min or body.supply_min < 0:
            return JSONResponse(status_code=400, content={
                "error": "schema", "detail": "invalid supply range"})
        location = (body.x_m, body.y_m)
        if state.strict_hull and outside_hull(state.table, location):
            return JSONResponse(status_code=422, content={
                "error": "outside-hull",
                "detail": "candidate lies outside the station hull; "
                          "extrapolation is disabled on this service"})

        if body.mode == "fixed_features":
            if body.base_features is None:
                return JSONResponse(status_code=400, content={
                    "error": "schema",
                    "detail": "fixed_features mode needs base_features"})
            base = dict(body.base_features)
        elif body.mode == "auto_fuse":
            if state.data is None:
                return JSONResponse(status_code=400, content={
                    "error": "schema",
                    "detail": "service has no raw data directory loaded; "
                              "use fixed_features mode"})
            base = fuse_candidate(location, state.data["stations"],
                                  state.data["pois"], state.data["census"],
                                  state.data["households"],
                                  state.fusion_config)
        else:
            return JSONResponse(status_code=400, content={
                "error": "schema", "detail": f"unknown mode {body.mode!r}"})

        supply_values = list(range(body.supply_min, body.supply_max + 1))
        try:
            result = whatif_curves({n: state.bundles[n] for n in names},
                                   location, base, supply_values, state.table,
                                   mode=body.mode)
        except SchemaMismatchError as e:
            return JSONResponse(status_code=400,
                                content={"error": "schema", "detail": str(e)})
        return {
            "location": {"x_m": result.location[0], "y_m": result.location[1]},
            "mode": result.mode,
            "extrapolation_warning": result.extrapolation_warning,
            "fusion_fingerprint": result.fusion_fingerprint,
            "base_features": result.base_features,
            "curves": [asdict(c) for c in result.curves],
            "neighborhood_3km": asdict(result.neighborhood_3km),
        }

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
