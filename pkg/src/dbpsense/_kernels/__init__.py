"""Numeric kernel backends.

Two interchangeable implementations of the hot loops exist: a compiled
Cython extension (``_core``) and a vectorized NumPy fallback (``_pure``).
The compiled one is used when importable; set ``DBPSENSE_PURE=1`` to force
the fallback. Both expose:

- ``arrival_and_concentration(order, indptr, up_node, up_q, up_tt,
  injections, c0, kb, n)`` — batched topological transport pass
- ``greedy_expected_time(times, k)`` — greedy min-mean sensor selection

Array contracts are documented in :mod:`dbpsense._kernels._pure`, which is
the readable reference implementation.
"""

import os

from . import _pure

if os.environ.get("DBPSENSE_PURE", "") == "1":
    _impl = _pure
    BACKEND = "pure"
else:
    try:
        from . import _core as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _pure
        BACKEND = "pure"

arrival_and_concentration = _impl.arrival_and_concentration
greedy_expected_time = _impl.greedy_expected_time

__all__ = ["arrival_and_concentration", "greedy_expected_time", "BACKEND"]
