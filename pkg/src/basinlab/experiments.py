"""Basin-of-attraction sweeps, magnitude-pruning curves and the L0 scaling study."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .constructions import (
    LINEAR,
    Layer,
    NetParams,
    SparsityMask,
    build_fft_net,
    build_parity_net,
    complex_l0,
    mask_of,
)
from .core import DomainError, Rng, derive_rng, gaussian_matrix, glorot_std, is_power_of_two
from .training import Task, TrainConfig, fft_target, linear_rel_error, train

log = logging.getLogger(__name__)

__all__ = [
    "NoiseSpec",
    "CurvePoint",
    "RunRecord",
    "ScalingPoint",
    "perturb",
    "random_linear_net",
    "exact_net",
    "train_cell",
    "run_cell",
    "basin_sweep",
    "sparsify_curve",
    "optimal_sparsification",
    "budgeted_sparsification",
    "error_at_budget",
    "scaling_study",
]

# stream tag for initialization noise; training uses the cell seed directly
STREAM_INIT = 7


@dataclass
class NoiseSpec:
    scales: list[float]
    seeds: list[int] = field(default_factory=lambda: [0])

    def __post_init__(self):
        self.scales = [float(s) for s in self.scales]
        self.seeds = [int(s) for s in self.seeds]
        if any(s < 0 for s in self.scales):
            raise DomainError("noise scales must be nonnegative")
        if self.scales != sorted(self.scales):
            raise DomainError("noise scales must be sorted ascending")
        if not self.seeds:
            raise DomainError("at least one seed is required")


@dataclass
class CurvePoint:
    threshold: float
    l0: int
    rel_error: float


@dataclass
class RunRecord:
    task: str
    n: int
    condition: str
    scale: float
    seed: int
    config: dict
    final_loss: float
    final_error: float  # bit error (parity) or relative Frobenius error (fft)
    trajectory: list = field(default_factory=list)
    sparsity_curve: list = field(default_factory=list)
    optimal_l0: Optional[int] = None
    optimal_error: Optional[float] = None
    budget_l0: Optional[int] = None
    budget_error: Optional[float] = None
    scaling_factor: Optional[float] = None

    def sort_key(self):
        return (self.n, self.condition, self.scale, self.seed)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ScalingPoint:
    n: int
    condition: str
    l0: int
    scaling_factor: float
    rel_error: float


def perturb(params: NetParams, scale: float, rng: Rng, mask: Optional[SparsityMask] = None) -> NetParams:
    """Add Glorot-scaled Gaussian noise to every weight and bias.

    Weight noise has std ``scale * glorot_std(fan_in, fan_out)``, bias noise
    ``scale * glorot_std(fan_in, 1)``.  With ``mask`` the noise only lands on
    masked-in entries and masked-out entries are set to exactly zero.
    """
    if scale < 0:
        raise DomainError("scale must be nonnegative")
    out = params.copy()
    if scale == 0 and mask is None:
        return out
    for layer in out.layers:
        fan_in, fan_out = layer.in_dim, layer.out_dim
        layer.weight += gaussian_matrix(rng, fan_out, fan_in, scale * glorot_std(fan_in, fan_out))
        layer.bias += gaussian_matrix(rng, fan_out, 1, scale * glorot_std(fan_in, 1))[:, 0]
    if mask is not None:
        mask.check(out)
        for p, m in zip(out.arrays(), mask.arrays()):
            p[~m] = 0.0
    return out


def random_linear_net(n: int, rng: Rng) -> NetParams:
    """Glorot-initialized linear net with the FFT net's depth and width."""
    if not is_power_of_two(n) or n < 2:
        raise DomainError(f"n must be a power of two >= 2, got {n}")
    d = 2 * n
    depth = n.bit_length()  # log2(n) + 1
    std = glorot_std(d, d)
    return NetParams([Layer(gaussian_matrix(rng, d, d, std), np.zeros(d), LINEAR) for _ in range(depth)])


def exact_net(task: Task, alpha: float = 10.0) -> NetParams:
    return build_parity_net(task.n, alpha) if task.kind == "parity" else build_fft_net(task.n)


def _initial_params(task: Task, condition: str, scale: float, seed: int, alpha: float, masked: bool):
    exact = exact_net(task, alpha)
    rng = derive_rng(seed, STREAM_INIT)
    if condition == "far":
        if task.kind != "fft":
            raise DomainError("random-init condition is only defined for the fft task")
        return random_linear_net(task.n, rng), None
    mask = mask_of(exact) if masked else None
    return perturb(exact, scale, rng, mask), mask


def train_cell(task: Task, condition: str, scale: float, seed: int, cfg: TrainConfig,
               masked: bool = False, alpha: float = 10.0, sparsify: bool = True):
    """Build the initial network for one sweep cell, train it, and score it.

    ``condition`` is ``"perturb"`` (exact net plus noise at ``scale``),
    ``"handcoded"`` (exact net, no training), or ``"far"`` (fresh Glorot
    random init, fft only).  The cell seed drives both the init noise and
    the training stream.  Returns ``(record, trained_params)``.
    """
    params, mask = _initial_params(task, condition, scale, seed, alpha, masked)
    cfg = replace(cfg, seed=seed, mask=mask)
    if condition == "handcoded":
        cfg = replace(cfg, steps=0)
    trained, traj = train(params, cfg, task)
    final = traj[-1]
    rec = RunRecord(
        task=task.kind,
        n=task.n,
        condition=condition,
        scale=float(scale),
        seed=int(seed),
        config={**cfg.to_dict(), "alpha": alpha, "task": task.kind, "n": task.n},
        final_loss=final.loss,
        final_error=final.test_error,
        trajectory=[asdict(p) for p in traj],
    )
    if task.kind == "fft" and sparsify:
        target = fft_target(task.n)
        curve = sparsify_curve(trained, target)
        rec.sparsity_curve = [asdict(p) for p in curve]
        rec.optimal_l0, rec.optimal_error = optimal_sparsification(curve)
        rec.budget_l0, rec.budget_error = budgeted_sparsification(curve)
        # the plain error minimum is decided by error differences far below
        # the noise level of a trained net, so the factor uses the budgeted L0
        rec.scaling_factor = rec.budget_l0 / (task.n * math.log2(task.n))
    log.info("cell %s n=%d %s scale=%g seed=%d -> error %.4g",
             task.kind, task.n, condition, scale, seed, rec.final_error)
    return rec, trained


def run_cell(*args, **kwargs) -> RunRecord:
    """``train_cell`` without the trained parameters."""
    return train_cell(*args, **kwargs)[0]


def _run_cell_args(args):
    return run_cell(*args)


def _map_cells(jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [_run_cell_args(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_cell_args, jobs))


def basin_sweep(task: Task, spec: NoiseSpec, cfg: TrainConfig, masked: bool = False,
                alpha: float = 10.0, workers: int = 1) -> list[RunRecord]:
    """Train perturbed copies of the exact net for every (scale, seed) cell.

    In the masked variant only the entries that are nonzero in the exact net
    are perturbed and trained; all others stay exactly zero.
    """
    jobs = [(task, "perturb", s, seed, cfg, masked, alpha) for s in spec.scales for seed in spec.seeds]
    records = _map_cells(jobs, workers)
    return sorted(records, key=RunRecord.sort_key)


def sparsify_curve(params: NetParams, target, max_points: Optional[int] = None) -> list[CurvePoint]:
    """Error and complex L0 after zeroing all parameters below each threshold.

    Thresholds are 0, every distinct nonzero parameter magnitude, and finally
    a value just above the largest one (the empty network, relative error 1).
    Pruning uses ``|w| < threshold`` and applies to biases as well as weights;
    L0 counts weight blocks only.  ``max_points`` subsamples the thresholds
    evenly (keeping both ends) for very large nets.
    """
    if not params.is_linear:
        raise DomainError("sparsification curves need a linear network")
    original = [a.copy() for a in params.arrays()]
    mags = np.unique(np.concatenate([np.abs(a).ravel() for a in original]))
    mags = mags[mags > 0]
    top = np.nextafter(mags[-1], np.inf) if mags.size else 1.0
    thresholds = np.concatenate([[0.0], mags, [top]])
    if max_points is not None and thresholds.size > max_points:
        idx = np.unique(np.linspace(0, thresholds.size - 1, max_points).round().astype(int))
        thresholds = thresholds[idx]

    absval = [np.abs(a) for a in original]
    pruned = params.copy()
    live = pruned.arrays()
    curve = []
    for tau in thresholds:
        for p, a, m in zip(live, original, absval):
            np.copyto(p, a)
            p[m < tau] = 0.0
        curve.append(CurvePoint(float(tau), complex_l0(pruned), linear_rel_error(pruned, target)))
    return curve


def optimal_sparsification(curve: Sequence[CurvePoint]) -> tuple[int, float]:
    """Point of minimum error; ties go to the smaller L0."""
    if not curve:
        raise DomainError("empty sparsification curve")
    best = min(curve, key=lambda p: (p.rel_error, p.l0))
    return best.l0, best.rel_error


def budgeted_sparsification(curve: Sequence[CurvePoint]) -> tuple[int, float]:
    """Smallest L0 whose error stays within ``max(1e-3, 1.1 * baseline)``.

    The baseline is the unpruned (threshold 0) error.
    """
    if not curve:
        raise DomainError("empty sparsification curve")
    budget = max(1e-3, 1.1 * curve[0].rel_error)
    ok = [p for p in curve if p.rel_error <= budget] or [curve[0]]
    best = min(ok, key=lambda p: (p.l0, p.rel_error))
    return best.l0, best.rel_error


def error_at_budget(curve: Sequence[CurvePoint], l0_budget: int) -> float:
    """Lowest error among curve points with at most ``l0_budget`` synapses."""
    errs = [p.rel_error for p in curve if p.l0 <= l0_budget]
    if not errs:
        raise DomainError(f"no curve point has L0 <= {l0_budget}")
    return min(errs)


def scaling_study(sizes: Sequence[int], near_scale: float, far_scale: Optional[float],
                  cfg: TrainConfig, seed: int = 0, far_mode: str = "random",
                  workers: int = 1) -> tuple[list[ScalingPoint], list[RunRecord]]:
    """Sparsified L0 per n for the three initial conditions.

    Each point uses the budgeted sparsification (smallest L0 within
    ``max(1e-3, 1.1 * baseline)`` relative error); the plain error minimum is
    still kept in each record as ``optimal_l0``.

    ``handcoded`` is the exact FFT net (untrained), ``near`` is the exact net
    perturbed at ``near_scale``, ``far`` is either a fresh Glorot random net
    (``far_mode="random"``) or the exact net perturbed at ``far_scale``
    (``far_mode="perturb"``).  Returns the scaling points and the full
    per-cell records.
    """
    if far_mode not in ("random", "perturb"):
        raise DomainError(f"unknown far_mode {far_mode!r}")
    if far_mode == "perturb" and far_scale is None:
        raise DomainError("far_mode='perturb' needs far_scale")
    for n in sizes:
        if not is_power_of_two(n) or n < 2:
            raise DomainError(f"sizes must be powers of two >= 2, got {n}")

    jobs, labels = [], []
    for n in sizes:
        task = Task("fft", n)
        jobs.append((task, "handcoded", 0.0, seed, cfg))
        jobs.append((task, "perturb", near_scale, seed, cfg))
        if far_mode == "random":
            jobs.append((task, "far", 0.0, seed, cfg))
        else:
            jobs.append((task, "perturb", far_scale, seed, cfg))
        labels += ["handcoded", "near", "far"]
    records = _map_cells(jobs, workers)

    points = []
    for (task, *_), label, rec in zip(jobs, labels, records):
        rec.condition = label
        points.append(ScalingPoint(task.n, label, rec.budget_l0, rec.scaling_factor, rec.budget_error))
    order = {"handcoded": 0, "near": 1, "far": 2}
    points.sort(key=lambda p: (p.n, order[p.condition]))
    records.sort(key=RunRecord.sort_key)
    return points, records
