"""Kernel backend selection.

The compiled extension is preferred when importable; set
LDPKIT_FORCE_FALLBACK=1 to insist on the NumPy fallback. Both expose the
same functions and enumeration order.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("LDPKIT_FORCE_FALLBACK"):
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _kernels_py

BACKEND = "compiled" if kernels is not _kernels_py else "python"


def available():
    """Mapping of backend name -> kernel module, for benchmarks and tests."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels

        out["compiled"] = _kernels
    except ImportError:
        pass
    return out
