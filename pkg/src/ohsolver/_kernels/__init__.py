"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy/scipy
reference implementation is the fallback.  OH_SOLVER_KERNELS=python|compiled
forces a backend (compiled raises if the extension is missing).
"""

import os

from . import reference as _reference

_choice = os.environ.get("OH_SOLVER_KERNELS", "auto").lower()

if _choice == "python":
    _impl = _reference
elif _choice == "compiled":
    from . import _fast as _impl
else:
    try:
        from . import _fast as _impl
    except ImportError:
        _impl = _reference

godunov_sweep = _impl.godunov_sweep
lax_friedrichs_sweep = _impl.lax_friedrichs_sweep
upwind_gradient = _impl.upwind_gradient
tridiag_solve = _impl.tridiag_solve


def backend():
    """Name of the active kernel backend ('compiled' or 'python')."""
    return _impl.BACKEND


def available_backends():
    names = ["python"]
    try:
        from . import _fast  # noqa: F401

        names.insert(0, "compiled")
    except ImportError:
        pass
    return names
