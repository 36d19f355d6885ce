"""Kernel backend selection.

The compiled extension is used when it imported cleanly; otherwise the pure
NumPy kernels take over.  Set ``ASYNCHY_BACKEND=python`` or ``=cython`` to
force one side (forcing ``cython`` raises if the extension is missing).
"""

from __future__ import annotations

import os

from . import _kernels_py

_requested = os.environ.get("ASYNCHY_BACKEND", "auto").lower()
if _requested not in {"auto", "cython", "python"}:
    raise RuntimeError(f"ASYNCHY_BACKEND must be auto|cython|python, not {_requested!r}")

if _requested == "python":
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        if _requested == "cython":
            raise
        _impl = _kernels_py

BACKEND = _impl.BACKEND_NAME

signed_product_pair_sum = _impl.signed_product_pair_sum
abs_product_pair_sum = _impl.abs_product_pair_sum
pair_stat_terms = _impl.pair_stat_terms
cumulative_sum = _impl.cumulative_sum
