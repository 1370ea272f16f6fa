"""Manifest-driven CSV ingestion for the raw layers.

The manifest is a plain key=value file naming the layer CSVs (paths
relative to the manifest), the demand window, fusion radii, and optional
column remappings (``<layer>.<role>=<csv column>``). See the README for
the full key list.
"""

from __future__ import annotations

from pathlib import Path

import pandas as pd

from .fusion import FusionConfig
from .spatial import GeodemandError

LAYERS = ("stations", "trips", "pois", "census", "households")
ROLES = {
    "stations": ("station_id", "x_m", "y_m", "vehicles"),
    "trips": ("station_id", "start", "duration_h", "distance_km", "kind"),
    "pois": ("x_m", "y_m", "category"),
    "census": ("x_m", "y_m"),
    "households": ("x_m", "y_m"),
}
CONFIG_KEYS = {
    "buffer_radius_m": float,
    "competitor_radius_m": float,
    "census_min_households": int,
    "census_radius_step_m": float,
    "max_trip_duration_h": float,
    "min_trip_distance_km": float,
    "max_trip_distance_km": float,
}


def read_manifest(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    out: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise GeodemandError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def fusion_config_from_manifest(manifest: dict) -> FusionConfig:
    kwargs = {}
    for key, cast in CONFIG_KEYS.items():
        if key in manifest:
            kwargs[key] = cast(manifest[key])
    census_agg = {}
    for attr in filter(None, manifest.get("census_mean_attrs", "").split(",")):
        census_agg[attr.strip()] = "mean"
    poi_categories = {}
    if manifest.get("poi_groups"):
        for group in manifest["poi_groups"].split(";"):
            name, labels = group.split(":", 1)
            poi_categories[name.strip()] = [s.strip() for s in labels.split("|")]
    return FusionConfig(census_agg=census_agg, poi_categories=poi_categories,
                        **kwargs)


def load_layers(manifest_path) -> dict:
    """Load every raw layer named by the manifest, with column remapping.

    Returns the layer DataFrames plus the demand window and FusionConfig.
    """
    manifest_path = Path(manifest_path)
    manifest = read_manifest(manifest_path)
    base = manifest_path.parent
    out: dict = {}
    for layer in LAYERS:
        if layer not in manifest:
            raise GeodemandError(f"manifest is missing the {layer!r} layer path")
        csv_path = base / manifest[layer]
        if not csv_path.exists():
            raise FileNotFoundError(csv_path)
        df = pd.read_csv(csv_path)
        rename = {}
        for role in ROLES[layer]:
            src = manifest.get(f"{layer}.{role}")
            if src:
                rename[src] = role
        if rename:
            df = df.rename(columns=rename)
        missing = [r for r in ROLES[layer] if r not in df.columns]
        if missing:
            raise GeodemandError(
                f"{csv_path.name} is missing column(s) {missing}; "
                f"declare a mapping like {layer}.{missing[0]}=<your column>")
        out[layer] = df
    out["trips"]["start"] = pd.to_datetime(out["trips"]["start"])
    if "window_start" not in manifest or "window_end" not in manifest:
        raise GeodemandError("manifest needs window_start and window_end")
    out["window"] = (pd.Timestamp(manifest["window_start"]),
                     pd.Timestamp(manifest["window_end"]))
    out["config"] = fusion_config_from_manifest(manifest)
    return out


def write_layers(layout: dict, outdir, cfg: FusionConfig | None = None) -> Path:
    """Write raw layers as CSVs plus a manifest; returns the manifest path."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    lines = []
    for layer in LAYERS:
        layout[layer].to_csv(outdir / f"{layer}.csv", index=False)
        lines.append(f"{layer}={layer}.csv")
    start, end = layout["window"]
    lines.append(f"window_start={start.isoformat()}")
    lines.append(f"window_end={end.isoformat()}")
    if cfg is not None:
        for key in CONFIG_KEYS:
            lines.append(f"{key}={getattr(cfg, key)}")
        mean_attrs = [a for a, rule in cfg.census_agg.items() if rule == "mean"]
        if mean_attrs:
            lines.append(f"census_mean_attrs={','.join(mean_attrs)}")
    manifest = outdir / "manifest.txt"
    manifest.write_text("\n".join(lines) + "\n")
    return manifest
