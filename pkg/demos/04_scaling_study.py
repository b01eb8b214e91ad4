# %% [markdown]
# # How the sparsified size scales with n
#
# The scaling factor is the sparsified complex L0 divided by n log2 n.  The
# butterfly network gives 2 + 1/log2 n, a flat line.  Nets trained from near
# the butterfly solution stay on that line.  Nets trained from random
# weights end up larger, and the gap grows with n.
#
# Training every cell for the default 200000 steps takes most of an hour;
# this demo trims the budget.  Pass ``--full`` for the full run.

# %%
import sys

from basinlab.experiments import scaling_study
from basinlab.results import emit_plot_data
from basinlab.training import TrainConfig

FULL = "--full" in sys.argv
sizes = [8, 16, 32] if FULL else [4, 8, 16]
cfg = TrainConfig.for_task("fft", eval_every=20_000, **({} if FULL else {"steps": 20_000}))

# %%
points, records = scaling_study(sizes, near_scale=0.01, far_scale=None, cfg=cfg)
for p in points:
    print(f"n {p.n:3d}  {p.condition:10s} L0 {p.l0:5d}  factor {p.scaling_factor:.3f}  "
          f"rel error {p.rel_error:.4f}")

# %% [markdown]
# The plain error minimum of each pruning curve is kept too.  For trained
# nets it often keeps nearly every weight, because pruning tiny weights
# moves the error only in the sixth digit.

# %%
for r in records:
    if r.condition != "handcoded":
        print(f"n {r.n:3d} {r.condition:5s} error-minimum L0 {r.optimal_l0}, budgeted L0 {r.budget_l0}")

# %%
emit_plot_data(points, "runs/demo_scaling")
