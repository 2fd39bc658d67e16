"""Hot-loop stream kernels: compiled extension with a pure-Python fallback.

The compiled backend (``_core``, Cython) is selected at import when present;
set ONLINEFDR_PURE=1 to force the pure backend. Both expose the same
``run_lord_family`` contract and agree with the reference engine to 1e-12
per step (see tests/test_kernels.py and benchmarks/bench_kernels.py).
"""

import os

from . import _pure

if os.environ.get("ONLINEFDR_PURE"):
    _impl = _pure
    BACKEND = "pure"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = _pure
        BACKEND = "pure"

run_lord_family = _impl.run_lord_family

FAMILY_LORD = 0
FAMILY_SPENDING = 1
FAMILY_UNCORRECTED = 2
REWARD_CONSTANT = 0
REWARD_SWITCHING = 1


def backend() -> str:
    """Name of the active backend: 'compiled' or 'pure'."""
    return BACKEND
