"""Forward passes, analytic gradients, Adam, and the training loop.

Gradients are lists of arrays in the canonical ``NetParams.arrays()`` order
``[dW0, db0, dW1, db1, ...]``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .constructions import SIGMOID, NetParams, SparsityMask
from .core import DomainError, Rng, ShapeError, as_matrix, derive_rng, is_power_of_two
from .oracles import dft_matrix, realify

log = logging.getLogger(__name__)

__all__ = [
    "MSE_MINIBATCH",
    "EXACT_LINEAR",
    "Task",
    "TrainConfig",
    "AdamState",
    "Batch",
    "forward",
    "collapse",
    "mse_loss_grad",
    "exact_linear_loss_grad",
    "adam_step",
    "sample_binary_batch",
    "parity_bit_error",
    "linear_rel_error",
    "fft_target",
    "train",
    "TrajectoryPoint",
]

MSE_MINIBATCH = "mse_minibatch"
EXACT_LINEAR = "exact_linear"

# stream tags for derive_rng; keep stable, they define reproducibility
STREAM_BATCHES = 1
STREAM_TEST = 2


@dataclass(frozen=True)
class Task:
    kind: str  # "parity" or "fft"
    n: int

    def __post_init__(self):
        if self.kind not in ("parity", "fft"):
            raise DomainError(f"unknown task {self.kind!r}")
        if not is_power_of_two(self.n) or self.n < 2:
            raise DomainError(f"{self.kind} needs n a power of two >= 2, got {self.n}")

    @property
    def loss_kind(self) -> str:
        return MSE_MINIBATCH if self.kind == "parity" else EXACT_LINEAR

    @property
    def in_dim(self) -> int:
        return self.n if self.kind == "parity" else 2 * self.n

    @property
    def out_dim(self) -> int:
        return 1 if self.kind == "parity" else 2 * self.n


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    steps: int = 20_000
    batch_size: int = 1000
    beta: float = 0.0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    mask: Optional[SparsityMask] = None
    loss_kind: Optional[str] = None  # None: inferred from the task
    eval_every: int = 1000
    test_size: int = 10_000
    grad_tol: float = 0.0  # stop early once the gradient norm drops below this

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise DomainError("learning_rate must be positive")
        if self.steps < 0:
            raise DomainError("steps must be nonnegative")
        if self.batch_size < 1:
            raise DomainError("batch_size must be positive")
        if self.beta < 0:
            raise DomainError("beta must be nonnegative")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise DomainError("Adam decay rates must lie in [0, 1)")
        if not self.adam_eps > 0:
            raise DomainError("adam_eps must be positive")
        if self.eval_every < 1 or self.test_size < 1:
            raise DomainError("eval_every and test_size must be positive")
        if self.loss_kind not in (None, MSE_MINIBATCH, EXACT_LINEAR):
            raise DomainError(f"unknown loss_kind {self.loss_kind!r}")

    @classmethod
    def for_task(cls, kind: str, **overrides) -> "TrainConfig":
        """Defaults for a task family: parity uses plain MSE for 2e4 steps,
        fft uses beta=1e-3 for up to 2e5 steps with a 1e-7 gradient stop."""
        if kind == "fft":
            base = dict(steps=200_000, beta=1e-3, grad_tol=1e-7)
        else:
            base = {}
        base.update(overrides)
        return cls(**base)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "mask"}
        d["masked"] = self.mask is not None
        return d


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params: NetParams) -> "AdamState":
        arrays = params.arrays()
        return cls([np.zeros_like(a) for a in arrays], [np.zeros_like(a) for a in arrays])


@dataclass
class Batch:
    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        self.inputs = as_matrix(self.inputs)
        self.targets = as_matrix(self.targets)
        if self.inputs.shape[0] != self.targets.shape[0]:
            raise ShapeError("inputs and targets must have the same number of rows")


@dataclass
class TrajectoryPoint:
    step: int
    loss: float
    test_error: float
    grad_norm: float


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _forward_cache(params: NetParams, x: np.ndarray):
    """Activations ``[x, a1, ..., aL]`` plus the scaled sigmoid pre-activations
    (``None`` for linear layers) that the backward pass needs."""
    acts, pre = [x], []
    for layer in params.layers:
        z = acts[-1] @ layer.weight.T + layer.bias
        if layer.activation == SIGMOID:
            z = params.alpha * z
            pre.append(z)
            acts.append(_sigmoid(z))
        else:
            pre.append(None)
            acts.append(z)
    return acts, pre


def forward(params: NetParams, inputs, return_cache: bool = False):
    """Evaluate the network on a batch (rows are samples).

    With ``return_cache`` the list of activations ``[x, a1, ..., aL]`` is
    returned instead of only the output.
    """
    x = as_matrix(inputs)
    if x.shape[1] != params.in_dim:
        raise ShapeError(f"input width {x.shape[1]} != network input {params.in_dim}")
    acts, _ = _forward_cache(params, x)
    return acts if return_cache else acts[-1]


def _backward(params: NetParams, acts: list[np.ndarray], pre: list, grad_out: np.ndarray):
    grads: list[np.ndarray] = [None] * (2 * len(params.layers))
    delta = grad_out
    for i in range(len(params.layers) - 1, -1, -1):
        layer = params.layers[i]
        if layer.activation == SIGMOID:
            # sigma'(z) = sigma(z) sigma(-z); forming 1 - a instead loses all
            # relative precision once the unit saturates
            delta = delta * (params.alpha * acts[i + 1] * _sigmoid(-pre[i]))
        grads[2 * i] = delta.T @ acts[i]
        grads[2 * i + 1] = delta.sum(axis=0)
        if i:
            delta = delta @ layer.weight
    return grads


def collapse(params: NetParams) -> np.ndarray:
    """Product ``W_L ... W_1`` of a linear network's weights."""
    if not params.is_linear:
        raise DomainError("collapse needs an all-linear network")
    m = params.layers[0].weight
    for layer in params.layers[1:]:
        m = layer.weight @ m
    return m


def _collapsed_bias(params: NetParams) -> np.ndarray:
    c = params.layers[0].bias
    for layer in params.layers[1:]:
        c = layer.weight @ c + layer.bias
    return c


def mse_loss_grad(params: NetParams, batch: Batch):
    """Mean over the batch of the squared error ``||y - net(x)||^2``."""
    x = as_matrix(batch.inputs)
    if x.shape[1] != params.in_dim:
        raise ShapeError(f"input width {x.shape[1]} != network input {params.in_dim}")
    acts, pre = _forward_cache(params, x)
    out = acts[-1]
    if out.shape != batch.targets.shape:
        raise ShapeError(f"targets {batch.targets.shape} vs outputs {out.shape}")
    resid = out - batch.targets
    b = out.shape[0]
    loss = float(np.sum(resid * resid) / b)
    grads = _backward(params, acts, pre, (2.0 / b) * resid)
    return loss, grads


def exact_linear_loss_grad(params: NetParams, target, beta: float = 0.0):
    """Expected squared error over white inputs plus squared-L1 weight penalty.

    For ``x ~ N(0, I)`` and the affine map ``x -> M x + c``,
    ``E ||M x + c - T x||^2 = ||M - T||_F^2 + ||c||^2``.  It is evaluated by
    pushing the batch of all basis vectors (and the zero vector, which reads
    off ``c``) through the network and back.  The penalty is
    ``beta * sum_j (sum |W_j|)^2`` with subgradient ``sign(0) = 0``.
    """
    if not params.is_linear:
        raise DomainError("exact linear loss needs an all-linear network")
    if beta < 0:
        raise DomainError("beta must be nonnegative")
    target = as_matrix(target)
    d = params.in_dim
    if target.shape != (params.out_dim, d):
        raise ShapeError(f"target {target.shape} vs network map {(params.out_dim, d)}")

    probe = np.vstack([np.eye(d), np.zeros((1, d))])
    acts, pre = _forward_cache(params, probe)
    out = acts[-1]
    c = out[d]
    resid = out[:d] - c - target.T  # row k is ((M - T) e_k)^T
    loss = float(np.sum(resid * resid) + c @ c)

    grad_out = np.empty_like(out)
    grad_out[:d] = 2.0 * resid
    grad_out[d] = -2.0 * resid.sum(axis=0) + 2.0 * c
    grads = _backward(params, acts, pre, grad_out)

    if beta:
        for i, layer in enumerate(params.layers):
            l1 = np.abs(layer.weight).sum()
            loss += beta * l1 * l1
            grads[2 * i] = grads[2 * i] + 2.0 * beta * l1 * np.sign(layer.weight)
    return loss, grads


def adam_step(params: NetParams, grads, state: AdamState, cfg: TrainConfig):
    """One bias-corrected Adam update, in place.

    Entries where ``cfg.mask`` is False are left untouched.
    Returns ``(params, state)`` for convenience.
    """
    arrays = params.arrays()
    if len(grads) != len(arrays) or len(state.m) != len(arrays):
        raise ShapeError("gradients, state and parameters are not congruent")
    masks = cfg.mask.arrays() if cfg.mask is not None else [None] * len(arrays)
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    state.t += 1
    bc1 = 1.0 - b1**state.t
    bc2 = 1.0 - b2**state.t
    for p, g, m, v, mk in zip(arrays, grads, state.m, state.v, masks):
        if g.shape != p.shape:
            raise ShapeError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        update = cfg.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + cfg.adam_eps)
        if mk is not None:
            update = np.where(mk, update, 0.0)
        p -= update
    return params, state


def sample_binary_batch(rng: Rng, n: int, batch_size: int) -> Batch:
    """Uniform random bit vectors with their parity as the target."""
    if n < 1 or batch_size < 1:
        raise DomainError("n and batch_size must be positive")
    bits = rng.integers(0, 2, size=(batch_size, n), dtype=np.int8)
    targets = (bits.sum(axis=1) % 2).astype(np.float64)[:, None]
    return Batch(bits.astype(np.float64), targets)


def parity_bit_error(params: NetParams, batch: Batch) -> float:
    """Fraction of rows where ``|output - parity| > 0.5``."""
    out = forward(params, batch.inputs)
    return float(np.mean(np.abs(out - batch.targets) > 0.5))


def linear_rel_error(params: NetParams, target) -> float:
    """Relative expected error of a linear net: ``sqrt(||M-T||^2 + ||c||^2) / ||T||``.

    With zero biases this is the relative Frobenius error of the collapsed map.
    """
    target = as_matrix(target)
    diff = collapse(params) - target
    c = _collapsed_bias(params)
    return float(np.sqrt(np.sum(diff * diff) + c @ c) / np.linalg.norm(target))


def fft_target(n: int) -> np.ndarray:
    return realify(dft_matrix(n))


def _grad_norm(grads) -> float:
    return float(np.sqrt(sum(np.sum(g * g) for g in grads)))


def train(params: NetParams, cfg: TrainConfig, task: Task):
    """Train a copy of ``params`` on ``task``.

    Parity draws a fresh minibatch per step; fft follows the exact expected
    loss.  Metrics are recorded at step 0, every ``cfg.eval_every`` steps and
    at the final step.  Returns ``(params, trajectory)``.
    """
    if params.in_dim != task.in_dim or params.out_dim != task.out_dim:
        raise ShapeError(
            f"network maps {params.in_dim}->{params.out_dim}, "
            f"task {task.kind}({task.n}) needs {task.in_dim}->{task.out_dim}"
        )
    loss_kind = cfg.loss_kind or task.loss_kind
    if loss_kind != task.loss_kind:
        raise DomainError(f"loss {loss_kind} does not fit task {task.kind}")
    if cfg.mask is not None:
        cfg.mask.check(params)

    params = params.copy()
    state = AdamState.zeros_like(params)

    if task.kind == "parity":
        batch_rng = derive_rng(cfg.seed, STREAM_BATCHES)
        test_batch = sample_binary_batch(derive_rng(cfg.seed, STREAM_TEST), task.n, cfg.test_size)

        def loss_grad():
            batch = sample_binary_batch(batch_rng, task.n, cfg.batch_size)
            return mse_loss_grad(params, batch)

        def test_error():
            return parity_bit_error(params, test_batch)

        def eval_loss_grad():
            return mse_loss_grad(params, test_batch)
    else:
        target = fft_target(task.n)

        def loss_grad():
            return exact_linear_loss_grad(params, target, cfg.beta)

        def test_error():
            return linear_rel_error(params, target)

        eval_loss_grad = loss_grad

    trajectory: list[TrajectoryPoint] = []

    def record(step, loss, gnorm):
        trajectory.append(TrajectoryPoint(step, loss, test_error(), gnorm))
        log.debug("step %d loss %.6g test_error %.6g", step, loss, trajectory[-1].test_error)

    if cfg.steps == 0:
        # no minibatch is drawn; parity reports the test-batch loss
        loss, grads = eval_loss_grad()
        record(0, loss, _grad_norm(grads))
        return params, trajectory

    step = 0
    for step in range(1, cfg.steps + 1):
        loss, grads = loss_grad()
        if cfg.mask is not None:
            grads = [np.where(mk, g, 0.0) for g, mk in zip(grads, cfg.mask.arrays())]
        gnorm = _grad_norm(grads)
        if step == 1:
            record(0, loss, gnorm)
        if cfg.grad_tol and gnorm < cfg.grad_tol:
            step -= 1
            break
        adam_step(params, grads, state, cfg)
        if step % cfg.eval_every == 0:
            record(step, loss, gnorm)

    if not trajectory or trajectory[-1].step != step:
        loss, grads = loss_grad()
        record(step, loss, _grad_norm(grads))
    return params, trajectory


def with_mask(cfg: TrainConfig, mask: Optional[SparsityMask]) -> TrainConfig:
    return replace(cfg, mask=mask)
