# %% [markdown]
# # Hand-coded networks
#
# Two networks whose weights are written down rather than learned:
#
# * a sigmoid XOR tree that computes the parity of n bits, and
# * a deep linear network of butterfly layers that computes the discrete
#   Fourier transform, acting on complex vectors stored as interleaved
#   real/imaginary parts.

# %%
import itertools

import numpy as np

from basinlab.constructions import build_fft_net, build_parity_net, complex_l0, fft_l0
from basinlab.oracles import dft_matrix, parity_oracle, realify
from basinlab.training import collapse, forward

# %% [markdown]
# ## Parity
#
# Each pair of bits feeds two sigmoid units, an OR-like one and an AND-like
# one.  Their difference is the XOR of the pair, which the next stage reads.

# %%
n = 8
net = build_parity_net(n, alpha=10.0)
print("layer shapes:", [layer.weight.shape for layer in net.layers])
print("neurons:", net.neuron_count())

x = np.array(list(itertools.product([0, 1], repeat=n)), dtype=float)
out = forward(net, x)[:, 0]
want = np.array([parity_oracle(row) for row in x])
print("thresholded output matches parity on all", len(x), "inputs:",
      bool(np.array_equal(out > 0.5, want == 1)))
print("largest deviation from the 0/1 target:", np.abs(out - want).max())

# %% [markdown]
# Lowering the inverse temperature softens every sigmoid.  Around alpha = 4
# the deviations compound through the tree and the thresholded output starts
# to fail.

# %%
for alpha in (10.0, 6.0, 4.0, 3.0):
    out = forward(build_parity_net(n, alpha), x)[:, 0]
    acc = np.mean((out > 0.5) == (want == 1))
    print(f"alpha {alpha:4.1f}: accuracy {acc:.3f}, max deviation {np.abs(out - want).max():.3f}")

# %% [markdown]
# ## FFT
#
# A bit-reversal permutation followed by log2 n butterfly layers.  The
# product of the layers is the DFT matrix up to rounding.

# %%
for n in (4, 16, 64):
    fft = build_fft_net(n)
    err = np.abs(collapse(fft) - realify(dft_matrix(n))).max()
    print(f"n={n:3d}: {len(fft.layers)} layers, complex L0 {complex_l0(fft)} "
          f"(2 n log2 n + n = {fft_l0(n)}), max error {err:.2e}")

# %%
# a dense DFT needs n^2 complex entries; the butterflies need about 2 n log2 n
for n in (8, 64, 512):
    print(f"n={n}: dense {n * n}, factored {fft_l0(n)}")
