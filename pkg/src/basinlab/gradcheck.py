"""Central finite-difference checks of the analytic gradients.

The finite differences evaluate their own loss formulas in extended precision
(``np.longdouble``) instead of reusing the training code.  That keeps the check
independent of the backward pass.  It also pushes the round-off floor low
enough that small gradient entries (saturated sigmoids) can be checked to a
relative tolerance too.

Central differences at step ``h`` still carry an absolute round-off of about
``eps * |loss| / h`` (around 1e-15 here), so entries below ``GRAD_FLOOR`` in
magnitude are compared on an absolute scale rather than a relative one.
"""

from __future__ import annotations

import numpy as np

from .constructions import LINEAR, SIGMOID, Layer, NetParams, build_parity_net
from .core import Rng, gaussian_matrix, glorot_std
from .training import Batch, exact_linear_loss_grad, mse_loss_grad, sample_binary_batch

__all__ = [
    "numeric_grads",
    "relative_errors",
    "mse_objective",
    "linear_objective",
    "check_parity",
    "check_linear",
    "random_linear",
]

_EXT = np.longdouble

# magnitude below which gradient entries are compared absolutely
GRAD_FLOOR = 1e-8


def mse_objective(params: NetParams, batch: Batch):
    """Loss of ``arrays -> mean ||y - net(x)||^2`` in extended precision."""
    acts = [l.activation for l in params.layers]
    alpha = _EXT(params.alpha)
    x0 = batch.inputs.astype(_EXT)
    y = batch.targets.astype(_EXT)

    def loss(arrays):
        x = x0
        for i, act in enumerate(acts):
            x = x @ arrays[2 * i].T + arrays[2 * i + 1]
            if act == SIGMOID:
                with np.errstate(over="ignore"):
                    x = 1 / (1 + np.exp(-alpha * x))
        r = x - y
        return np.sum(r * r) / r.shape[0]

    return loss


def linear_objective(target, beta: float):
    """``||M - T||_F^2 + ||c||^2 + beta * sum_j ||W_j||_1^2`` from the layer products."""
    t = np.asarray(target, dtype=_EXT)
    beta = _EXT(beta)

    def loss(arrays):
        m = arrays[0]
        c = arrays[1]
        for w, b in zip(arrays[2::2], arrays[3::2]):
            m = w @ m
            c = w @ c + b
        d = m - t
        pen = sum(np.sum(np.abs(w)) ** 2 for w in arrays[0::2])
        return np.sum(d * d) + np.sum(c * c) + beta * pen

    return loss


def numeric_grads(loss_fn, params: NetParams, h: float = 1e-5) -> list[np.ndarray]:
    """Central differences of ``loss_fn`` (which takes extended-precision
    parameter arrays in canonical order) for every parameter entry.

    Uses the fourth-order five-point stencil.  With the steep sigmoids of the
    parity net the truncation error of the plain two-point stencil alone can
    reach 1e-5 relative at ``h = 1e-5``.
    """
    arrays = [a.astype(_EXT) for a in params.arrays()]
    h = _EXT(h)
    grads = []
    for a in arrays:
        g = np.zeros(a.size)
        flat = a.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            vals = []
            for k in (2, 1, -1, -2):
                flat[i] = orig + k * h
                vals.append(loss_fn(arrays))
            flat[i] = orig
            g[i] = (-vals[0] + 8 * vals[1] - 8 * vals[2] + vals[3]) / (12 * h)
        grads.append(g.reshape(a.shape))
    return grads


def relative_errors(analytic, numeric, floor: float = GRAD_FLOOR) -> np.ndarray:
    """Entrywise ``|a - f| / max(|a|, |f|, floor)`` over all arrays."""
    a = np.concatenate([np.ravel(x) for x in analytic])
    f = np.concatenate([np.ravel(x) for x in numeric])
    return np.abs(a - f) / np.maximum(np.maximum(np.abs(a), np.abs(f)), floor)


def random_linear(dims, rng: Rng, std: float = 1.0, bias_std: float = 0.0,
                  margin: float = 1e-3) -> NetParams:
    """Glorot-scaled random linear net.

    Weight magnitudes are clipped below at ``margin`` so finite differences
    of the L1 penalty never straddle its kink at zero.
    """
    layers = []
    for fan_in, fan_out in zip(dims, dims[1:]):
        w = gaussian_matrix(rng, fan_out, fan_in, std * glorot_std(fan_in, fan_out))
        w = np.where(w < 0, -1.0, 1.0) * np.maximum(np.abs(w), margin)
        b = gaussian_matrix(rng, fan_out, 1, bias_std)[:, 0]
        layers.append(Layer(w, b, LINEAR))
    return NetParams(layers)


def check_parity(n: int, rng: Rng, scale: float = 0.3, batch_size: int = 16,
                 alpha: float = 10.0, h: float = 1e-5, params: NetParams | None = None) -> float:
    """Max relative gradient error of the MSE loss on a perturbed parity net."""
    from .experiments import perturb

    if params is None:
        params = perturb(build_parity_net(n, alpha), scale, rng)
    batch = sample_binary_batch(rng, params.in_dim, batch_size)
    _, analytic = mse_loss_grad(params, batch)
    numeric = numeric_grads(mse_objective(params, batch), params, h)
    return float(relative_errors(analytic, numeric).max())


def check_linear(params: NetParams, target, beta: float, h: float = 1e-5) -> float:
    """Max relative gradient error of the exact linear loss (with penalty)."""
    _, analytic = exact_linear_loss_grad(params, target, beta)
    numeric = numeric_grads(linear_objective(target, beta), params, h)
    return float(relative_errors(analytic, numeric).max())
