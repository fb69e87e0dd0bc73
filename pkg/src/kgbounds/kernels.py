"""Kernel dispatch: numba when available, numpy otherwise.

Set ``KGBOUNDS_DISABLE_NUMBA=1`` to force the pure-numpy path.  Both
implementations stay importable (``jit`` / ``np_impl``) so they can be
benchmarked and cross-checked against each other in one process.
"""

import os
import warnings

from . import _kernels_np as np_impl

_DISABLED = os.environ.get("KGBOUNDS_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError("numba disabled by KGBOUNDS_DISABLE_NUMBA")
    # numba complains about an old TBB at the first parallel launch, then
    # falls back to another threading layer; the warning is noise here
    warnings.filterwarnings("ignore", message=".*TBB.*")
    from . import _kernels_jit as jit
except ImportError:  # numba missing or disabled
    jit = None

USE_NUMBA = jit is not None
BACKEND = "numba" if USE_NUMBA else "numpy"

_impl = jit if USE_NUMBA else np_impl

alternate_signs = _impl.alternate_signs
alternate_vectors = _impl.alternate_vectors
bnb_suffix = _impl.bnb_suffix
brute_force = _impl.brute_force
pairwise_sweep = _impl.pairwise_sweep

__all__ = [
    "BACKEND",
    "USE_NUMBA",
    "alternate_signs",
    "alternate_vectors",
    "bnb_suffix",
    "brute_force",
    "jit",
    "pairwise_sweep",
    "np_impl",
]
