"""Ground-truth functions: parity, the DFT matrix, a reference radix-2 FFT.

Fourier convention: unnormalized forward transform with kernel
``exp(-2*pi*i*j*k/n)``.  Complex matrices are ``complex128`` arrays; the
real networks work on the *realified* form, where each complex entry
``a + bi`` becomes the 2x2 block ``[[a, -b], [b, a]]`` and a complex vector
is stored interleaved ``[Re z0, Im z0, Re z1, Im z1, ...]``.
"""

from __future__ import annotations

import numpy as np

from .core import DomainError, ShapeError, is_power_of_two

__all__ = [
    "parity_oracle",
    "dft_matrix",
    "fft_reference",
    "bit_reversal_perm",
    "realify",
    "realify_vector",
    "complexify_vector",
]


def parity_oracle(x) -> int:
    """XOR of all bits of ``x``: 1 iff the number of ones is odd."""
    x = np.asarray(x)
    if x.size and not np.all((x == 0) | (x == 1)):
        raise DomainError("parity is only defined on 0/1 vectors")
    return int(np.count_nonzero(x) % 2)


def dft_matrix(n: int) -> np.ndarray:
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    jk = np.outer(np.arange(n), np.arange(n)) % n
    return _unit_roots(n)[jk]


def _unit_roots(n: int) -> np.ndarray:
    """``exp(-2 pi i t / n)`` for t in [0, n), exact at quarter turns."""
    t = np.arange(n)
    w = np.exp(-2j * np.pi * t / n)
    # cos/sin of multiples of pi/2 leave ~1e-16 residue; snap those to 0
    w.real[np.abs(w.real) < 1e-15] = 0.0
    w.imag[np.abs(w.imag) < 1e-15] = 0.0
    return w


def bit_reversal_perm(n: int) -> np.ndarray:
    """Index array mapping i to i with its log2(n) bits reversed."""
    if not is_power_of_two(n):
        raise DomainError(f"n must be a power of two, got {n}")
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def fft_reference(x) -> np.ndarray:
    """Iterative radix-2 decimation-in-time FFT (bit-reversed input)."""
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 1:
        raise ShapeError("fft_reference expects a vector")
    n = x.size
    if not is_power_of_two(n):
        raise DomainError(f"length must be a power of two, got {n}")
    y = x[bit_reversal_perm(n)].copy()
    m = 2
    while m <= n:
        half = m // 2
        tw = np.exp(-2j * np.pi * np.arange(half) / m)
        y = y.reshape(-1, m)
        top = y[:, :half].copy()
        bot = y[:, half:] * tw
        y[:, :half] = top + bot
        y[:, half:] = top - bot
        y = y.reshape(n)
        m *= 2
    return y


def realify(c) -> np.ndarray:
    """Real 2r x 2c matrix acting on interleaved Re/Im vectors."""
    c = np.asarray(c, dtype=np.complex128)
    if c.ndim != 2:
        raise ShapeError("realify expects a matrix")
    r, k = c.shape
    out = np.zeros((2 * r, 2 * k))
    out[0::2, 0::2] = c.real
    out[0::2, 1::2] = -c.imag
    out[1::2, 0::2] = c.imag
    out[1::2, 1::2] = c.real
    return out


def realify_vector(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.complex128)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


def complexify_vector(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] % 2:
        raise ShapeError("interleaved vector must have even length")
    return v[..., 0::2] + 1j * v[..., 1::2]
