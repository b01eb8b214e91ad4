"""Hand-coded optimal networks and their sparsity patterns.

Two families are built here:

* a sigmoid XOR tree that computes n-bit parity with 2n - 1 neurons, and
* a deep linear network that factors the n-point DFT into a bit-reversal
  permutation followed by log2(n) radix-2 butterfly stages.

Weights are stored as ``(out_dim, in_dim)`` matrices, so a layer maps a batch
``X`` (rows are samples) to ``act(X @ W.T + b)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import DomainError, ShapeError, is_power_of_two
from .oracles import _unit_roots, bit_reversal_perm, realify

__all__ = [
    "SIGMOID",
    "LINEAR",
    "Layer",
    "NetParams",
    "SparsityMask",
    "build_parity_net",
    "build_fft_net",
    "mask_of",
    "l0",
    "complex_l0",
    "fft_l0",
    "dumps_params",
    "loads_params",
    "FORMAT_VERSION",
]

SIGMOID = "sigmoid"
LINEAR = "linear"
_ACTIVATIONS = (SIGMOID, LINEAR)
FORMAT_VERSION = 1
_L0_TOL = 1e-12


@dataclass
class Layer:
    weight: np.ndarray
    bias: np.ndarray
    activation: str = LINEAR

    def __post_init__(self):
        self.weight = np.array(self.weight, dtype=np.float64, ndmin=2)
        self.bias = np.array(self.bias, dtype=np.float64).reshape(-1)
        if self.activation not in _ACTIVATIONS:
            raise DomainError(f"unknown activation {self.activation!r}")
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ShapeError(
                f"bias shape {self.bias.shape} does not match weight {self.weight.shape}"
            )

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]


@dataclass
class NetParams:
    """Ordered layers plus the sigmoid inverse temperature ``alpha``."""

    layers: list[Layer]
    alpha: float = 1.0

    def __post_init__(self):
        if not self.layers:
            raise ShapeError("a network needs at least one layer")
        for i, (a, b) in enumerate(zip(self.layers, self.layers[1:])):
            if a.out_dim != b.in_dim:
                raise ShapeError(
                    f"layer {i} outputs {a.out_dim} but layer {i + 1} expects {b.in_dim}"
                )
        if self.has_sigmoid and not self.alpha > 0:
            raise DomainError("alpha must be positive when sigmoid layers are present")
        self.alpha = float(self.alpha)

    @property
    def has_sigmoid(self) -> bool:
        return any(l.activation == SIGMOID for l in self.layers)

    @property
    def is_linear(self) -> bool:
        return not self.has_sigmoid

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def weights(self) -> list[np.ndarray]:
        return [l.weight for l in self.layers]

    def arrays(self) -> list[np.ndarray]:
        """Parameter arrays in canonical order ``[W0, b0, W1, b1, ...]``.

        These are the live arrays, not copies; in-place updates change the
        network.
        """
        out = []
        for l in self.layers:
            out += [l.weight, l.bias]
        return out

    def n_params(self) -> int:
        return sum(a.size for a in self.arrays())

    def neuron_count(self) -> int:
        return sum(l.out_dim for l in self.layers)

    def copy(self) -> "NetParams":
        return NetParams(
            [Layer(l.weight.copy(), l.bias.copy(), l.activation) for l in self.layers],
            self.alpha,
        )

    def with_arrays(self, arrays) -> "NetParams":
        """New network with the same layout and the given parameter arrays."""
        arrays = list(arrays)
        if len(arrays) != 2 * len(self.layers):
            raise ShapeError("wrong number of parameter arrays")
        layers = []
        for i, l in enumerate(self.layers):
            w, b = arrays[2 * i], arrays[2 * i + 1]
            if np.shape(w) != l.weight.shape or np.shape(b) != l.bias.shape:
                raise ShapeError(f"array shapes for layer {i} do not match")
            layers.append(Layer(np.array(w), np.array(b), l.activation))
        return NetParams(layers, self.alpha)

    def equal(self, other: "NetParams") -> bool:
        """Exact (bitwise value) equality of layout and parameters."""
        if self.alpha != other.alpha or len(self.layers) != len(other.layers):
            return False
        return all(
            a.activation == b.activation
            and np.array_equal(a.weight, b.weight)
            and np.array_equal(a.bias, b.bias)
            for a, b in zip(self.layers, other.layers)
        )


@dataclass
class SparsityMask:
    """Boolean arrays congruent with a network's weights and biases.

    True marks an entry that is nonzero in the reference solution and is
    allowed to change during training.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray] = field(default_factory=list)

    def arrays(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def popcount(self) -> int:
        return int(sum(np.count_nonzero(a) for a in self.arrays()))

    def check(self, params: NetParams) -> None:
        if len(self.weights) != len(params.layers) or len(self.biases) != len(params.layers):
            raise ShapeError("mask has a different number of layers than the network")
        for m, p in zip(self.arrays(), params.arrays()):
            if m.shape != p.shape:
                raise ShapeError(f"mask shape {m.shape} != parameter shape {p.shape}")


def build_parity_net(n: int, alpha: float = 10.0) -> NetParams:
    """Sigmoid XOR tree computing parity of ``n`` bits.

    Each stage pairs adjacent bits (a, b) and computes an OR-like neuron
    ``sigma(alpha*(a + b - 0.5))`` and an AND-like neuron
    ``sigma(alpha*(a + b - 1.5))``.  Their difference is the XOR of the pair,
    which the next stage reads with weights +1/-1.  Stage widths are
    n, n/2, ..., 2 and a final neuron thresholds the last XOR at 0.5.
    """
    if not is_power_of_two(n) or n < 2:
        raise DomainError(f"parity net needs a power of two n >= 2, got {n}")
    if not alpha > 0:
        raise DomainError("alpha must be positive")

    layers = []
    bits = n  # number of (virtual) bits entering the stage
    reads_pairs = False  # stage 1 reads raw bits, later stages read (u, v) pairs
    while bits >= 2:
        pairs = bits // 2
        in_dim = 2 * bits if reads_pairs else bits
        w = np.zeros((2 * pairs, in_dim))
        for k in range(pairs):
            for bit in (2 * k, 2 * k + 1):
                if reads_pairs:
                    cols, vals = [2 * bit, 2 * bit + 1], [1.0, -1.0]
                else:
                    cols, vals = [bit], [1.0]
                w[2 * k, cols] = vals
                w[2 * k + 1, cols] = vals
        b = np.tile([-0.5, -1.5], pairs)
        layers.append(Layer(w, b, SIGMOID))
        bits = pairs
        reads_pairs = True

    layers.append(Layer(np.array([[1.0, -1.0]]), np.array([-0.5]), SIGMOID))
    return NetParams(layers, alpha)


def build_fft_net(n: int) -> NetParams:
    """Realified radix-2 FFT as log2(n) + 1 linear layers of width 2n.

    The first layer is the bit-reversal permutation.  Butterfly stage with
    span m maps, for each block start s and j < m/2,
    ``y[s+j] = x[s+j] + w x[s+j+m/2]`` and ``y[s+j+m/2] = x[s+j] - w x[s+j+m/2]``
    with ``w = exp(-2 pi i j / m)``.  Their product is the unnormalized DFT.
    """
    if not is_power_of_two(n) or n < 2:
        raise DomainError(f"FFT net needs a power of two n >= 2, got {n}")
    roots = _unit_roots(n)
    perm = np.zeros((n, n), dtype=np.complex128)
    perm[np.arange(n), bit_reversal_perm(n)] = 1.0
    factors = [perm]
    m = 2
    while m <= n:
        half = m // 2
        c = np.zeros((n, n), dtype=np.complex128)
        for s in range(0, n, m):
            for j in range(half):
                w = roots[j * (n // m)]
                top, bot = s + j, s + j + half
                c[top, top] = 1.0
                c[top, bot] = w
                c[bot, top] = 1.0
                c[bot, bot] = -w
        factors.append(c)
        m *= 2
    layers = [Layer(realify(f), np.zeros(2 * n), LINEAR) for f in factors]
    return NetParams(layers, alpha=1.0)


def mask_of(params: NetParams, tol: float = 0.0) -> SparsityMask:
    if tol < 0:
        raise DomainError("tol must be nonnegative")
    return SparsityMask(
        [np.abs(l.weight) > tol for l in params.layers],
        [np.abs(l.bias) > tol for l in params.layers],
    )


def l0(params: NetParams, tol: float = 0.0) -> int:
    """Count of parameter entries (weights and biases) with magnitude > tol."""
    return mask_of(params, tol).popcount()


def _block_l0(w: np.ndarray, tol: float = _L0_TOL) -> int:
    r, c = w.shape
    if r % 2 or c % 2:
        raise DomainError(f"realified layer needs even dimensions, got {w.shape}")
    blocks = (np.abs(w) > tol).reshape(r // 2, 2, c // 2, 2)
    return int(np.count_nonzero(blocks.any(axis=(1, 3))))


def complex_l0(params) -> int:
    """Number of complex synapses in a realified linear network.

    A complex synapse is a 2x2 real block with any entry above 1e-12 in
    magnitude.  Accepts a ``NetParams`` or a list of weight matrices.
    """
    weights = params.weights if isinstance(params, NetParams) else list(params)
    return sum(_block_l0(np.asarray(w)) for w in weights)


def fft_l0(n: int) -> int:
    """Complex L0 of the hand-coded FFT network: 2n log2(n) + n."""
    return 2 * n * (n.bit_length() - 1) + n


# --- serialization -----------------------------------------------------------


def dumps_params(params: NetParams) -> str:
    """JSON text of a network; float repr makes the round trip exact."""
    doc = {
        "format": "basinlab.netparams",
        "version": FORMAT_VERSION,
        "alpha": params.alpha,
        "layers": [
            {
                "activation": l.activation,
                "shape": list(l.weight.shape),
                "weight": l.weight.ravel().tolist(),
                "bias": l.bias.tolist(),
            }
            for l in params.layers
        ],
    }
    return json.dumps(doc, indent=1) + "\n"


def loads_params(text: str) -> NetParams:
    doc = json.loads(text)
    if doc.get("format") != "basinlab.netparams":
        raise DomainError("not a basinlab network document")
    if doc.get("version") != FORMAT_VERSION:
        raise DomainError(f"unsupported network format version {doc.get('version')}")
    layers = []
    for i, entry in enumerate(doc["layers"]):
        rows, cols = entry["shape"]
        w = np.array(entry["weight"], dtype=np.float64)
        if w.size != rows * cols:
            raise ShapeError(f"layer {i}: {w.size} weights for shape {(rows, cols)}")
        layers.append(Layer(w.reshape(rows, cols), entry["bias"], entry["activation"]))
    return NetParams(layers, doc["alpha"])
