# %% [markdown]
# # Sparsifying a trained FFT network
#
# Train a deep linear network toward the DFT with a squared-L1 penalty, then
# sweep a magnitude threshold and record the complex L0 and the relative
# error at each threshold.  A net started near the butterfly solution prunes
# back to about the butterfly L0.  A net started from random weights of the
# same depth does not.

# %%
import numpy as np

from basinlab.constructions import fft_l0
from basinlab.experiments import CurvePoint, error_at_budget, train_cell
from basinlab.training import Task, TrainConfig

n = 8
task = Task("fft", n)
cfg = TrainConfig.for_task("fft", steps=40_000, eval_every=10_000)

# %%
near, _ = train_cell(task, "perturb", 0.01, 0, cfg)
far, _ = train_cell(task, "far", 0.0, 0, cfg)
for rec in (near, far):
    print(f"{rec.condition:8s} trained rel error {rec.final_error:.4f}; "
          f"budgeted sparsification L0 {rec.budget_l0} at error {rec.budget_error:.4f}")

# %% [markdown]
# The curves, subsampled.  Error first stays flat (or even drops a little)
# as noise-level weights are pruned, then climbs once structural weights go.

# %%
for rec in (near, far):
    curve = [CurvePoint(**p) for p in rec.sparsity_curve]
    idx = np.unique(np.linspace(0, len(curve) - 1, 12).round().astype(int))
    print(rec.condition)
    for i in idx:
        p = curve[i]
        print(f"  threshold {p.threshold:9.3e}  L0 {p.l0:4d}  rel error {p.rel_error:.4f}")

# %%
budget = int(1.25 * fft_l0(n))
ne = error_at_budget([CurvePoint(**p) for p in near.sparsity_curve], budget)
fe = error_at_budget([CurvePoint(**p) for p in far.sparsity_curve], budget)
print(f"best error with L0 <= {budget}: near {ne:.4f}, far {fe:.4f}")
