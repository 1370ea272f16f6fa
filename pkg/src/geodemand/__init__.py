"""geodemand: spatial regression toolkit for station-level demand modeling.

Library layers:

- ``spatial`` / ``voronoi``: planar primitives (kernels, k-NN index,
  buffers, Voronoi partitions, spatial weights).
- ``table`` / ``fusion`` / ``synth``: feature-table construction from raw
  layers, plus synthetic generators with known coefficient surfaces.
- ``selection``: LASSO path selection and local collinearity screening.
- ``linear`` / ``mgwr``: OLS, GWR (fit/predict/bandwidth search) and
  multiscale GWR via backfitting.
- ``forest`` / ``shap``: random-forest regression, per-station local
  forests, and exact tree SHAP attribution.
- ``diagnostics``: comparison metrics, K-fold CV, Moran's I, ablation.
- ``bundle`` / ``whatif`` / ``service`` / ``cli``: persistence, supply
  what-if curves, HTTP API, command line.
"""

__version__ = "0.1.0"


def __getattr__(name):
    # late exports keep `import geodemand` light; submodules import eagerly
    from importlib import import_module

    exports = {
        "FeatureTable": "table", "Standardization": "table",
        "Kernel": "spatial", "BandwidthSpec": "spatial",
        "SpatialIndex": "spatial", "kernel_weight": "spatial",
        "resolve_bandwidth": "spatial", "buffer_aggregate": "spatial",
        "nearest_join": "spatial", "knn_weights": "spatial",
        "build_voronoi": "voronoi", "VoronoiPartition": "voronoi",
        "FusionConfig": "fusion", "clean_trips": "fusion",
        "compute_demand": "fusion", "fuse_features": "fusion",
        "fuse_candidate": "fusion",
        "SynthSpec": "synth", "Surface": "synth", "synth_generate": "synth",
        "lasso_fit": "selection", "lasso_select": "selection",
        "local_collinearity": "selection",
        "ols_fit": "linear", "gwr_fit": "linear", "gwr_predict": "linear",
        "select_bandwidth": "linear", "significance": "linear",
        "loocv_r2": "linear",
        "mgwr_fit": "mgwr",
        "ForestParams": "forest", "rf_fit": "forest", "rf_predict": "forest",
        "grf_fit": "forest", "grf_predict": "forest",
        "tree_shap": "shap", "shap_summary": "shap",
        "metrics": "diagnostics", "kfold_cv": "diagnostics",
        "morans_i": "diagnostics",
        "ModelConfig": "pipeline", "ModelPipeline": "pipeline",
        "evaluate_models": "reports", "ablate": "reports",
        "bundle_from_state": "bundle", "save_bundle": "bundle",
        "load_bundle": "bundle",
        "whatif_curves": "whatif",
        "create_app": "service",
    }
    if name in exports:
        return getattr(import_module(f".{exports[name]}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
