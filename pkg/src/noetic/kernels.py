"""Kernel backend selection.

Imports the compiled extension when present, the NumPy fallback otherwise.
Set ``NOETIC_PURE_PYTHON=1`` to force the fallback (used by the parity tests
and the benchmark).
"""

import os

if os.environ.get("NOETIC_PURE_PYTHON"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels_c as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = _impl.BACKEND

sosfilt = _impl.sosfilt
sampen_counts = _impl.sampen_counts
apen_phi = _impl.apen_phi
higuchi_lengths = _impl.higuchi_lengths
dfa_fluctuations = _impl.dfa_fluctuations
