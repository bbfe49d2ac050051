"""Backend selection for the hot loops.

The compiled extension ``fedtick._kernels`` is used when it was built and
``FEDTICK_PURE_PYTHON`` is not set to ``1``; otherwise the numpy fallback in
``fedtick._kernels_py`` is used. Both expose the same functions.
"""
import os

from fedtick import _kernels_py

if os.environ.get("FEDTICK_PURE_PYTHON") == "1":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from fedtick import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

quadratic_round = _impl.quadratic_round
k_rounds_total = _impl.k_rounds_total

__all__ = ["BACKEND", "quadratic_round", "k_rounds_total", "_kernels_py"]
