"""Global vs geographically weighted regression on clustered data.
===============================================================

Two station clusters 100 km apart share a predictor whose true effect is
+2 in the west and -1 in the east. A pooled OLS averages the two regimes
away; GWR recovers them, beats OLS out of sample, and leaves residuals
without spatial structure.
"""

import numpy as np

from geodemand import ModelConfig, evaluate_models, significance
from geodemand.linear import gwr_fit, select_bandwidth
from geodemand.reports import format_aligned
from geodemand.synth import ORIGIN, preset_two_cluster, synth_generate

table, truth = synth_generate(preset_two_cluster(n=400, sigma=0.1), seed=1)

configs = [
    ModelConfig(kind="ols"),
    ModelConfig(kind="gwr", kernel="bisquare", mode="adaptive", criterion="cv"),
]
report = evaluate_models(table, configs, cv_k=5, seed=0, n_permutations=199)
print(format_aligned(report))
print("\nNote the Moran's I p-value: the pooled model's residuals cluster in "
      "space,\nthe local model's do not.")

# look at the recovered coefficient surfaces
std = table.standardize()
bw = select_bandwidth(std, "bisquare", "adaptive", "cv").spec
fit = gwr_fit(std, "bisquare", bw)
west = table.locations[:, 0] - ORIGIN[0] < 100_000.0
scale = std.standardization.x_std[0] / std.standardization.y_std
print(f"\nadaptive bandwidth: {bw.k} neighbors")
print(f"true f1 slope west/east:      +2.000 / -1.000")
print(f"recovered (destandardized):   "
      f"{fit.beta[west, 1].mean() / scale:+.3f} / "
      f"{fit.beta[~west, 1].mean() / scale:+.3f}")

sig = significance(fit)
print("\nper-feature local-estimate summary (standardized scale):")
print(sig.to_frame()[["feature", "mean", "std", "mean_t",
                      "adjusted_alpha", "pct_significant"]].to_string(index=False))

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = __file__.replace(".py", "_coefficients.png")
    fig, ax = plt.subplots(figsize=(7, 4))
    s = ax.scatter(table.locations[:, 0] / 1000, table.locations[:, 1] / 1000,
                   c=fit.beta[:, 1] / scale, cmap="coolwarm", s=12)
    fig.colorbar(s, label="local slope of f1 (original scale)")
    ax.set_xlabel("x [km]")
    ax.set_ylabel("y [km]")
    ax.set_title("GWR recovers the two coefficient regimes")
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    print(f"\ncoefficient map saved to {out}")
except ImportError:
    pass
