"""Select the compiled radial kernels when available.

Set ``PLATEOPT_PURE_PYTHON=1`` to force the numpy/LAPACK fallback.
"""

import os

from . import _pykernels as python_impl

compiled_impl = None
if os.environ.get("PLATEOPT_PURE_PYTHON") != "1":
    try:
        from . import _kernels as compiled_impl
    except ImportError:
        compiled_impl = None

_impl = compiled_impl if compiled_impl is not None else python_impl

IMPLEMENTATION = _impl.IMPLEMENTATION
tridiag_solve = _impl.tridiag_solve
inverse_power = _impl.inverse_power
power_loop = python_impl.power_loop


def use(name: str) -> None:
    """Switch the active implementation (``"cython"`` or ``"python"``)."""
    global _impl, IMPLEMENTATION, tridiag_solve, inverse_power
    if name == "cython":
        if compiled_impl is None:
            raise ImportError("compiled kernels are not built")
        _impl = compiled_impl
    elif name == "python":
        _impl = python_impl
    else:
        raise ValueError(f"unknown kernel implementation {name!r}")
    IMPLEMENTATION = _impl.IMPLEMENTATION
    tridiag_solve = _impl.tridiag_solve
    inverse_power = _impl.inverse_power
