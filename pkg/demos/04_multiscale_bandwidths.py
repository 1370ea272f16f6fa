"""Multiscale GWR: one bandwidth per feature.
==========================================

Four features drive demand: one whose effect flips sign across a spatial
boundary (a local process) and three whose effects are constant
everywhere (global processes). Single-bandwidth GWR must compromise;
MGWR's backfitting gives the step feature a local bandwidth and the
constants near-global ones.
"""

import numpy as np

from geodemand import mgwr_fit, significance
from geodemand.linear import gwr_fit, select_bandwidth
from geodemand.synth import preset_multiscale, synth_generate

table, truth = synth_generate(preset_multiscale(n=400, sigma=0.1), seed=0)
std = table.standardize()

search = select_bandwidth(std, "bisquare", "adaptive", "aicc")
gwr = gwr_fit(std, "bisquare", search.spec)
print(f"single-bandwidth GWR: {search.spec.k} neighbors for every feature, "
      f"AICc {gwr.aicc:.1f}")

fit = mgwr_fit(std, "bisquare", "aicc")
print(f"MGWR: converged={fit.converged} after {len(fit.trace)} iterations, "
      f"AICc {fit.aicc:.1f}")
print(f"effective parameters: trS = {fit.trS:.1f} "
      f"(= sum of per-feature ENP: {np.round(fit.enp, 2)})")

names = ("intercept",) + std.columns
print("\nper-feature bandwidths (f1 carries the step surface):")
for name, k, km, enp in zip(names, fit.bandwidths, fit.resolved_median_km,
                            fit.enp):
    scale = "local" if k < 0.25 * table.n else (
        "regional" if k < 0.75 * table.n else "global")
    print(f"  {name:10s} {k:4d} neighbors (~{km:6.1f} km median)  "
          f"ENP {enp:6.2f}  -> {scale}")

sig = significance(fit)
print("\nsignificance at per-feature adjusted alpha:")
print(sig.to_frame()[["feature", "mean", "std", "adjusted_alpha",
                      "pct_significant"]].to_string(index=False))

print("\nbackfitting score-of-change trace:")
for it, soc in fit.trace:
    print(f"  iteration {it:2d}  SOC-RSS {soc:.2e}")
