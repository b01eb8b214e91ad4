"""Dense float64 linear algebra helpers and seeded randomness.

Matrices are plain ``numpy.ndarray`` objects of dtype float64 with two
dimensions.  Random streams come from numpy's PCG64 bit generator, which is
specified independently of platform, so a seed reproduces the same samples
everywhere.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "ShapeError",
    "DomainError",
    "Rng",
    "make_rng",
    "derive_rng",
    "as_matrix",
    "matmul",
    "gaussian_matrix",
    "glorot_std",
    "is_power_of_two",
]

Rng = np.random.Generator


class ShapeError(ValueError):
    """Operand dimensions do not line up."""


class DomainError(ValueError):
    """Argument lies outside the domain an operation is defined on."""


def make_rng(seed: int) -> Rng:
    """Return a PCG64 generator seeded with a 64-bit unsigned integer."""
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise DomainError(f"seed must fit in 64 unsigned bits, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


def derive_rng(seed: int, *stream: int) -> Rng:
    """Independent PCG64 stream keyed by ``seed`` and integer stream tags.

    Used to give each experiment cell (and each purpose inside a cell) its
    own stream, so results do not depend on execution order.
    """
    ss = np.random.SeedSequence([int(seed), *map(int, stream)])
    return np.random.Generator(np.random.PCG64(ss))


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {m.shape}")
    return m


def matmul(a, b) -> np.ndarray:
    """Matrix product with an explicit shape check."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    out = a @ b
    if not np.all(np.isfinite(out)):
        raise DomainError("matrix product produced non-finite entries")
    return out


def gaussian_matrix(rng: Rng, rows: int, cols: int, std: float) -> np.ndarray:
    """I.i.d. N(0, std**2) entries.

    The stream always advances by ``rows * cols`` normals, including for
    ``std == 0``, so later draws do not depend on the scale.
    """
    if std < 0:
        raise DomainError(f"std must be nonnegative, got {std}")
    z = rng.standard_normal((rows, cols))
    # + 0.0 turns -0.0 into 0.0 when std == 0
    return z * float(std) + 0.0


def glorot_std(fan_in: int, fan_out: int) -> float:
    if fan_in < 1 or fan_out < 1:
        raise DomainError("fan_in and fan_out must be positive")
    return float(np.sqrt(2.0 / (fan_in + fan_out)))


def is_power_of_two(n) -> bool:
    return isinstance(n, (int, np.integer)) and n >= 1 and (n & (n - 1)) == 0
