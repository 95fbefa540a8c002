"""Counter-based random streams.

Every stochastic routine in the package draws from a Philox4x64 generator
keyed by (seed, stream). Worker w of a job gets stream index w, so results
are reproducible for a fixed (seed, workers) pair regardless of execution
order, and distinct workers never share a stream.
"""

from __future__ import annotations

import numpy as np

RNG_NAME = "philox4x64"

_MASK64 = (1 << 64) - 1


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Generator for sub-stream `index` of the job keyed by `seed`."""
    key = np.array([seed & _MASK64, index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
