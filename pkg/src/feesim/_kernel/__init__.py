"""Routing kernel backend selection.

The compiled Cython kernel is preferred; the pure-Python kernel is a
drop-in replacement with identical results (both are exercised by the
test suite). Set FEESIM_PURE=1 to force the pure backend.
"""

import os

from . import pykernel

if os.environ.get("FEESIM_PURE", "") not in ("", "0"):
    kernel = pykernel
    BACKEND = "pure"
else:
    try:
        from . import ckernel as kernel  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        kernel = pykernel
        BACKEND = "pure"


def get_kernel(name: str):
    """Fetch a backend by name ('pure' or 'cython'), for benchmarks/tests."""
    if name == "pure":
        return pykernel
    if name == "cython":
        from . import ckernel

        return ckernel
    raise ValueError(f"unknown kernel backend: {name}")
