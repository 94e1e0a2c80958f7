"""Kernel backend selection.

The compiled Cython extension (``hywf._kernels._core``) is preferred;
the pure-NumPy fallback is used when it is missing. ``HYWF_BACKEND``
forces a choice (``cython`` or ``numpy``), which the benchmark suite
uses to compare the two implementations.
"""

import os

from . import _fallback

_requested = os.environ.get("HYWF_BACKEND", "").strip().lower()
if _requested not in ("", "cython", "numpy"):
    raise RuntimeError(f"HYWF_BACKEND must be 'cython' or 'numpy', got {_requested!r}")

_impl = None
if _requested != "numpy":
    try:
        from . import _core as _impl
    except ImportError:
        if _requested == "cython":
            raise RuntimeError(
                "HYWF_BACKEND=cython but the compiled extension is not built; "
                "run 'pip install -e . --no-build-isolation'"
            ) from None

if _impl is not None:
    BACKEND = "cython"
else:
    BACKEND = "numpy"
    _impl = _fallback

apply_1q = _impl.apply_1q
apply_2q = _impl.apply_2q
apply_3q = _impl.apply_3q
ry_ansatz_states = _impl.ry_ansatz_states

__all__ = ["BACKEND", "apply_1q", "apply_2q", "apply_3q", "ry_ansatz_states"]
