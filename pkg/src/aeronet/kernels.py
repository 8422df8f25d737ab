"""Backend selection for the hot kernels.

The compiled extension is used when it was built; set
``AERONET_PURE_PYTHON=1`` to force the numpy/Python fallback.
"""
import os

from . import _kernels_py

python_backend = _kernels_py

if os.environ.get("AERONET_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    compiled_backend = None
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
        compiled_backend = _impl
    except ImportError:  # extension not built
        _impl = _kernels_py
        compiled_backend = None

BACKEND = "python" if _impl is _kernels_py else "cython"

dijkstra_dense = _impl.dijkstra_dense
residual_grid_min = _impl.residual_grid_min
