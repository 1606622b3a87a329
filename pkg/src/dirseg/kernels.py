"""Kernel backend selection: compiled extension when built, numpy otherwise.

Set DIRSEG_PURE_PYTHON=1 to force the numpy fallback even when the extension
is available (used by the benchmark and for debugging).
"""

import os

from . import _kernels_py

if os.environ.get("DIRSEG_PURE_PYTHON"):
    _active = _kernels_py
else:
    try:
        from . import _kernels as _active
    except ImportError:
        _active = _kernels_py

BACKEND = _active.BACKEND_NAME

viterbi_kernel = _active.viterbi_kernel
forward_backward_kernel = _active.forward_backward_kernel
ffbs_kernel = _active.ffbs_kernel


def available_backends():
    """Name -> kernel module for every importable backend (used by benchmarks
    and the cross-backend tests)."""
    out = {"python": _kernels_py}
    if _active is not _kernels_py:
        out[BACKEND] = _active
    return out
