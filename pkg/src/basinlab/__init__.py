"""Hand-coded efficient deep networks for parity and the FFT, and tools to
measure whether gradient training can find them again from perturbed starts."""

__version__ = "0.1.0"

from .constructions import (  # noqa: E402
    NetParams,
    SparsityMask,
    build_fft_net,
    build_parity_net,
    complex_l0,
    mask_of,
)
from .core import glorot_std, make_rng  # noqa: E402
from .experiments import (  # noqa: E402
    NoiseSpec,
    basin_sweep,
    optimal_sparsification,
    perturb,
    scaling_study,
    sparsify_curve,
)
from .oracles import dft_matrix, fft_reference, parity_oracle  # noqa: E402
from .training import Task, TrainConfig, collapse, forward, train  # noqa: E402
