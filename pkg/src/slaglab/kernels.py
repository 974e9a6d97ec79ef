"""Backend selection for the hot frame-integration loop.

The compiled extension is used when it imports; setting
``SLAG_PURE_PYTHON=1`` forces the numpy implementation.
"""

import os

from . import _frame_kernels_py

BACKEND = "numpy"
sweep_lines = _frame_kernels_py.sweep_lines

if os.environ.get("SLAG_PURE_PYTHON") != "1":
    try:
        from . import _frame_kernels

        sweep_lines = _frame_kernels.sweep_lines
        BACKEND = "cython"
    except ImportError:  # extension not built
        pass


def get_sweep(backend=None):
    """Return the sweep function for ``backend`` ('cython', 'numpy' or None)."""
    if backend is None:
        return sweep_lines
    if backend == "numpy":
        return _frame_kernels_py.sweep_lines
    if backend == "cython":
        from . import _frame_kernels

        return _frame_kernels.sweep_lines
    raise ValueError(f"unknown backend {backend!r}")
