"""Hot numerical kernels with a compiled core and a NumPy fallback.

The backend is chosen once at import time: the Cython extension if it
built, otherwise the pure-NumPy reference implementation.  Override with
the environment variable NCPOLY_KERNELS = auto | compiled | python.
Both backends expose the same four functions with identical semantics;
`benchmarks/bench_kernels.py` compares their throughput.
"""

import os

from . import _reference

_choice = os.environ.get("NCPOLY_KERNELS", "auto").lower()
if _choice not in ("auto", "compiled", "python"):
    raise ValueError(
        f"NCPOLY_KERNELS must be auto, compiled or python, got {_choice!r}")

if _choice == "python":
    _impl = _reference
else:
    try:
        from . import _speedups as _impl
    except ImportError:
        if _choice == "compiled":
            raise
        _impl = _reference

BACKEND = _impl.BACKEND_NAME
csr_matvec = _impl.csr_matvec
cg_csr = _impl.cg_csr
local_matrices_const_grad = _impl.local_matrices_const_grad
local_matrices_ref_grad = _impl.local_matrices_ref_grad


def get_backend(name: str):
    """Return a specific backend module ('python' or 'compiled')."""
    if name == "python":
        return _reference
    if name == "compiled":
        from . import _speedups
        return _speedups
    raise ValueError(f"unknown backend {name!r}")
