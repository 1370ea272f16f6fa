"""Command-line entry points for the full pipeline.

Subcommands: fuse, select, fit, evaluate, ablate, whatif, serve, synth.
Exit codes: 0 success, 2 usage/validation, 3 missing file, 4 schema or
format mismatch, 5 unfitted-model reference, 1 anything else. Failures
print one machine-parseable line to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .bundle import (
    BundleFormatError,
    SchemaMismatchError,
    bundle_from_state,
    load_bundle,
    save_bundle,
)
from .data_io import load_layers, write_layers
from .diagnostics import kfold_cv
from .fusion import FusionConfig, clean_trips, compute_demand, fuse_candidate, fuse_features
from .pipeline import ModelConfig, ModelPipeline
from .forest import ForestParams
from .reports import (
    ablate,
    coefficient_export,
    evaluate_models,
    evaluate_model,
    format_aligned,
    selection_report,
)
from .selection import lasso_select, local_collinearity, remove_collinear
from .spatial import BandwidthSpec, GeodemandError, Kernel, UnfittedModelError
from .synth import (
    preset_multiscale,
    preset_two_cluster,
    preset_uniform,
    synth_generate,
    synth_raw_layout,
    synth_saturating_supply,
)
from .table import FeatureTable
from .whatif import whatif_curves

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING_FILE = 3
EXIT_SCHEMA = 4
EXIT_UNFITTED = 5
EXIT_OTHER = 1


def _fail(code: str, exit_code: int, msg: str) -> int:
    print(f'geodemand-error code={code} exit={exit_code} msg="{msg}"',
          file=sys.stderr)
    return exit_code


def _parse_bandwidth(text: str | None):
    """fixed:auto | fixed:<meters> | adaptive:auto | adaptive:<k>"""
    if text is None:
        return "fixed", None
    try:
        mode, value = text.split(":", 1)
    except ValueError:
        raise GeodemandError(f"bandwidth must look like fixed:auto, got {text!r}")
    if mode not in ("fixed", "adaptive"):
        raise GeodemandError(f"unknown bandwidth mode {mode!r}")
    if value == "auto":
        return mode, None
    if mode == "fixed":
        return mode, BandwidthSpec.fixed(float(value))
    return mode, BandwidthSpec.adaptive(int(value))


def _load_table(path) -> FeatureTable:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    return FeatureTable.from_csv(path)


# ------------------------------------------------------------------ commands

def cmd_fuse(args) -> int:
    layers = load_layers(args.manifest)
    cfg = layers["config"]
    kept, removed = clean_trips(layers["trips"], cfg)
    demand = compute_demand(kept, layers["stations"], layers["window"])
    table = fuse_features(layers["stations"], layers["pois"], layers["census"],
                          layers["households"], demand, cfg)
    table.to_csv(args.out)
    print(f"fused {table.n} stations x {table.p} features -> {args.out}")
    print(f"trips kept {len(kept)}; removed {removed}")
    return EXIT_OK


def cmd_select(args) -> int:
    table = _load_table(args.features).standardize()
    result = lasso_select(table, k_folds=args.k_folds, seed=args.seed,
                          manual_include=tuple(args.include or ()),
                          manual_exclude=tuple(args.exclude or ()))
    selected = table.select(result.selected)
    removed = ()
    vif_report = None
    if selected.p >= 2:
        k = max(selected.p + 2, min(selected.n - 1, selected.n // 4))
        bw = BandwidthSpec.adaptive(min(k, selected.n - 1))
        coefs = dict(zip(table.columns, result.fit.coefficients))
        removed, vif_report = remove_collinear(selected, Kernel.BISQUARE, bw, coefs)
    report = selection_report(result, table.columns, removed, vif_report)
    report.to_csv(args.out, index=False)
    kept = [c for c in result.selected if c not in removed]
    print(f"selected {len(kept)} features (lambda={result.lam:.6g}) -> {args.out}")
    return EXIT_OK


def _model_config(args, table: FeatureTable) -> ModelConfig:
    mode, bw = _parse_bandwidth(getattr(args, "bandwidth", None))
    forest = ForestParams(n_trees=args.trees, mtry=args.mtry,
                          min_leaf=args.min_leaf, max_depth=args.max_depth)
    return ModelConfig(kind=args.model, kernel=args.kernel, mode=mode,
                       criterion=args.criterion, bandwidth=bw, forest=forest,
                       grf_k=args.grf_k, select=args.select, seed=args.seed)


def cmd_fit(args) -> int:
    table = _load_table(args.features)
    config = _model_config(args, table)
    state = ModelPipeline(config).fit(table)
    bundle = bundle_from_state(
        state, units=table.units,
        fusion_fingerprint=table.metadata.get("fusion_fingerprint"))
    save_bundle(bundle, args.out)
    print(f"fitted {config.kind} on {table.n} stations -> {args.out}")
    if args.coefficients:
        if config.kind not in ("gwr", "mgwr"):
            return _fail("not-a-local-model", EXIT_USAGE,
                         "coefficient export needs gwr or mgwr")
        coefficient_export(state, table).to_csv(args.coefficients, index=False)
        print(f"coefficients -> {args.coefficients}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    table = _load_table(args.features)
    rows = []
    for path in args.bundle:
        bundle = load_bundle(path)
        row = evaluate_model(table, bundle.state.config, cv_k=args.cv,
                             seed=args.seed, n_permutations=args.permutations)
        rows.append(row)
    df = pd.DataFrame(rows)
    if args.out:
        df.to_csv(args.out, index=False)
    print(format_aligned(df))
    return EXIT_OK


def cmd_ablate(args) -> int:
    table = _load_table(args.features)
    grid = [(m, c, k) for m in args.modes.split(",")
            for c in args.criteria.split(",")
            for k in args.kernels.split(",")]
    df = ablate(table, grid, k=args.cv, seed=args.seed,
                n_permutations=args.permutations)
    if args.out:
        df.to_csv(args.out, index=False)
    print(format_aligned(df))
    return EXIT_OK


def cmd_whatif(args) -> int:
    table = _load_table(args.features)
    bundles = {}
    for path in args.bundle:
        b = load_bundle(path)
        bundles[Path(path).stem] = b
    location = (args.x, args.y)
    if args.mode == "auto_fuse":
        if not args.data:
            return _fail("missing-data", EXIT_USAGE,
                         "auto_fuse mode needs --data <manifest>")
        layers = load_layers(args.data)
        base = fuse_candidate(location, layers["stations"], layers["pois"],
                              layers["census"], layers["households"],
                              layers["config"])
    else:
        if not args.base_features:
            return _fail("missing-base-features", EXIT_USAGE,
                         "fixed_features mode needs --base-features <json>")
        base = json.loads(Path(args.base_features).read_text())
    result = whatif_curves(bundles, location, base,
                           range(args.supply_min, args.supply_max + 1), table,
                           mode=args.mode)
    rows = []
    for curve in result.curves:
        for s, d in zip(curve.supply_cars, curve.demand_trips_per_month):
            rows.append({"model": curve.model, "kind": curve.kind,
                         "supply_cars": s, "demand_trips_per_month": d})
    df = pd.DataFrame(rows)
    df.to_csv(args.out, index=False)
    print(format_aligned(df.head(10 * len(result.curves))))
    from dataclasses import asdict

    print("neighborhood_3km:", json.dumps(asdict(result.neighborhood_3km)))
    if result.extrapolation_warning:
        print("warning: candidate lies outside the station hull")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    table = _load_table(args.features)
    bundles = {Path(p).stem: load_bundle(p) for p in args.bundle}
    data = None
    cfg = None
    if args.data:
        layers = load_layers(args.data)
        data = layers
        cfg = layers["config"]
    app = create_app(bundles, table, data=data, fusion_config=cfg,
                     strict_hull=args.strict_hull, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def cmd_synth(args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    if args.preset == "raw":
        layout = synth_raw_layout(n_stations=args.n, seed=args.seed)
        manifest = write_layers(layout, outdir, FusionConfig())
        print(f"raw layers + manifest -> {manifest}")
        return EXIT_OK
    if args.preset == "saturating":
        table = synth_saturating_supply(n=args.n, seed=args.seed)
        truth = {"kind": "saturating", "knee_cars": table.metadata["knee_cars"],
                 "scale": table.metadata["scale"]}
    else:
        spec = {"two-cluster": preset_two_cluster,
                "multiscale": preset_multiscale,
                "uniform": preset_uniform}[args.preset](n=args.n)
        table, truth_obj = synth_generate(spec, seed=args.seed)
        truth = {"kind": args.preset, "sigma": truth_obj.sigma,
                 "beta_surfaces": [s.__dict__ for s in truth_obj.surfaces]}
    table.to_csv(outdir / "features.csv")
    (outdir / "truth.json").write_text(json.dumps(truth, indent=2, default=str))
    print(f"{args.preset} features ({table.n} x {table.p}) -> {outdir}/features.csv")
    return EXIT_OK


# ---------------------------------------------------------------- arg wiring

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geodemand",
        description="Spatial regression toolkit for station demand modeling")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fuse", help="fuse raw layers into a feature table")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("select", help="LASSO + local collinearity selection")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k-folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--include", action="append", metavar="FEATURE")
    p.add_argument("--exclude", action="append", metavar="FEATURE")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("fit", help="fit a model and save a bundle")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True,
                   choices=["ols", "gwr", "mgwr", "rf", "rf_coords", "grf"])
    p.add_argument("--kernel", default="exponential",
                   choices=["gaussian", "exponential", "bisquare", "boxcar"])
    p.add_argument("--bandwidth", default="fixed:auto",
                   help="fixed:auto | fixed:<m> | adaptive:auto | adaptive:<k>")
    p.add_argument("--criterion", default="aicc", choices=["aicc", "cv"])
    p.add_argument("--trees", type=int, default=500)
    p.add_argument("--mtry", type=int, default=None)
    p.add_argument("--min-leaf", type=int, default=5)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--grf-k", type=int, default=None)
    p.add_argument("--select", action="store_true",
                   help="run LASSO selection before fitting")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--coefficients", help="also export per-station coefficients")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("evaluate", help="Table-1-style model comparison")
    p.add_argument("--features", required=True)
    p.add_argument("--bundle", action="append", required=True)
    p.add_argument("--cv", type=int, default=10)
    p.add_argument("--permutations", type=int, default=999)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="GWR parameter grid, Table-4 layout")
    p.add_argument("--features", required=True)
    p.add_argument("--modes", default="fixed,adaptive")
    p.add_argument("--criteria", default="aicc,cv")
    p.add_argument("--kernels", default="gaussian,bisquare,exponential")
    p.add_argument("--cv", type=int, default=10)
    p.add_argument("--permutations", type=int, default=999)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("whatif", help="supply/demand curves at a location")
    p.add_argument("--features", required=True)
    p.add_argument("--bundle", action="append", required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--supply-min", type=int, default=1)
    p.add_argument("--supply-max", type=int, default=20)
    p.add_argument("--mode", default="auto_fuse",
                   choices=["auto_fuse", "fixed_features"])
    p.add_argument("--data", help="raw-layer manifest for auto_fuse")
    p.add_argument("--base-features", help="JSON file for fixed_features")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_whatif)

    p = sub.add_parser("serve", help="run the HTTP prediction service")
    p.add_argument("--features", required=True)
    p.add_argument("--bundle", action="append", required=True)
    p.add_argument("--data", help="raw-layer manifest enabling auto_fuse")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--strict-hull", action="store_true")
    p.add_argument("--ui", help="directory with the built what-if UI to serve at /")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("synth", help="generate synthetic datasets")
    p.add_argument("--preset", required=True,
                   choices=["two-cluster", "multiscale", "uniform",
                            "saturating", "raw"])
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as e:
        return _fail("missing-file", EXIT_MISSING_FILE, str(e))
    except (BundleFormatError, SchemaMismatchError) as e:
        return _fail("schema-mismatch", EXIT_SCHEMA, str(e))
    except UnfittedModelError as e:
        return _fail("unfitted-model", EXIT_UNFITTED, str(e))
    except GeodemandError as e:
        return _fail("invalid-input", EXIT_USAGE, str(e))
    except Exception as e:  # anything unexpected
        return _fail("internal", EXIT_OTHER, f"{type(e).__name__}: {e}")


if __name__ == "__main__":
    sys.exit(main())
