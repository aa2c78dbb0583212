"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly and the environment
variable ``WSNLIFE_NUMBA`` is not set to ``0``.  Both implementations are
importable directly (``kernels.numpy_impl`` / ``kernels.numba_impl``) so tests
and the benchmark can compare them.
"""

import os

from . import _numpy as numpy_impl

try:
    from . import _numba as numba_impl
except ImportError:  # pragma: no cover - numba is an optional accelerator
    numba_impl = None

USE_NUMBA = numba_impl is not None and os.environ.get("WSNLIFE_NUMBA", "1") != "0"

impl = numba_impl if USE_NUMBA else numpy_impl

inflow = impl.inflow
workloads = impl.workloads
objective = impl.objective
enumerate_objectives = impl.enumerate_objectives
pg_descent = impl.pg_descent
gradient = impl.gradient

__all__ = [
    "USE_NUMBA",
    "impl",
    "numpy_impl",
    "numba_impl",
    "inflow",
    "workloads",
    "objective",
    "enumerate_objectives",
    "pg_descent",
    "gradient",
]
