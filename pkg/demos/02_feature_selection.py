"""LASSO feature selection and local collinearity screening.
==========================================================

One genuinely predictive feature hides among ten noise columns, plus a
near-duplicate to trip the collinearity screen. The LASSO path shrinks the
noise away; the local VIF/condition-number screen then removes whatever
collinear structure survives.
"""

import numpy as np

from geodemand import BandwidthSpec, FeatureTable, Kernel, lasso_select
from geodemand.selection import lasso_path, local_collinearity, remove_collinear

rng = np.random.default_rng(0)
n = 400
signal = rng.normal(size=n)
noise = rng.normal(size=(n, 8))
near_dup = signal + rng.normal(0, 0.03, n)  # nearly collinear with the signal
X = np.column_stack([signal, near_dup, noise])
y = 2.5 * signal + rng.normal(0, 0.3, n)
columns = ("signal", "signal_copy") + tuple(f"noise{j}" for j in range(8))

table = FeatureTable(station_ids=np.arange(n),
                     locations=rng.uniform(0, 50_000, size=(n, 2)),
                     X=X, columns=columns, y=y).standardize()

# the regularization path: heavier penalties zero out more coefficients
lams, fits = lasso_path(table.X, table.y, n_points=25)
print("lambda path (top of path first):")
for lam, fit in list(zip(lams, fits))[::6]:
    nnz = int(np.count_nonzero(fit.coefficients))
    print(f"  lambda={lam:10.2f}  nonzero={nnz}")

# LASSO itself would drop the duplicate; a planner might insist on keeping
# a domain-favorite feature, which is what manual_include is for. Here it
# lets us watch the collinearity screen do its job downstream.
result = lasso_select(table, k_folds=10, seed=0,
                      manual_include=("signal_copy",))
print(f"\nCV-chosen lambda: {result.lam:.3f}")
print("selected:", ", ".join(result.selected))
print("labels:", {c: result.labels[c] for c in result.selected})

# the duplicate pair is collinear; per-location VIF flags both copies
report = local_collinearity(table.select(result.selected), Kernel.BISQUARE,
                            BandwidthSpec.adaptive(max(4, n // 4)))
print("\nmax local VIF per selected feature:")
for j, c in enumerate(result.selected):
    print(f"  {c:12s} {np.nanmax(report.vif[:, j]):10.2f}")
print("flagged:", report.flagged or "(none)")

coefs = dict(zip(table.columns, result.fit.coefficients))
removed, final = remove_collinear(table.select(result.selected),
                                  Kernel.BISQUARE,
                                  BandwidthSpec.adaptive(max(4, n // 4)), coefs)
print("removed by collinearity screen:", removed or "(none)")
print("remaining flags:", final.flagged or "(none)")
