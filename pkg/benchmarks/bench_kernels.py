"""Time the compiled kernels against the NumPy fallback on the hot reductions.

Run from a checkout or an installed tree:

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each case reports the best wall time per backend and the speedup of the
compiled extension. Results from the two backends are cross-checked to
1e-10 before timing so a fast-but-wrong kernel cannot win.
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np
from scipy.special import gammaln

from ldpkit._backend import available


def _lgtable(n: int) -> np.ndarray:
    return gammaln(np.arange(n + 2, dtype=float))


def _cases():
    tern_logp = np.log(np.array([0.2, 0.3, 0.5]))
    tern_fv = np.array([0.0, 1.0, 2.0])
    bern_logp = np.log(np.array([0.7, 0.3]))
    bern_fv = np.array([0.0, 1.0])

    rng = np.random.default_rng(7)
    trans = rng.uniform(0.05, 1.0, size=(3, 3))
    trans /= trans.sum(axis=1, keepdims=True)
    init = np.full(3, 1.0 / 3.0)

    return [
        (
            "halfspace k=3 n=500 (~126k types)",
            "halfspace_reduce",
            (500, tern_logp, tern_fv, 1.8 * 500, 1.0, _lgtable(500), False),
        ),
        (
            "halfspace+coords k=3 n=300",
            "halfspace_reduce",
            (300, tern_logp, tern_fv, 1.5 * 300, 1.0, _lgtable(300), True),
        ),
        (
            "halfspace k=2 n=2000",
            "halfspace_reduce",
            (2000, bern_logp, bern_fv, 0.5 * 2000, 1.0, _lgtable(2000), False),
        ),
        (
            "tvball k=3 n=250",
            "tvball_reduce",
            (250, tern_logp, 250 * np.array([0.4, 0.3, 0.3]), 0.2 * 2 * 250,
             _lgtable(250), False),
        ),
        (
            "markov dp k=2 n=3000",
            "markov_dp",
            (np.log(np.array([0.5, 0.5])),
             np.log(np.array([[0.9, 0.1], [0.2, 0.8]])),
             np.array([0, 1]), 3000, 2100),
        ),
        (
            "markov dp k=3 n=800 steps<=3",
            "markov_dp",
            (np.log(init), np.log(trans), np.array([0, 1, 3]), 800, 1200),
        ),
    ]


def _first(result):
    return result[0] if isinstance(result, tuple) else result


def _best_time(fn, args, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3, help="timings per case, best-of")
    args = ap.parse_args()

    backends = available()
    if "compiled" not in backends:
        print("compiled extension not importable; nothing to compare")
        return 1

    py, comp = backends["python"], backends["compiled"]
    width = max(len(name) for name, _, _ in _cases())
    print(f"{'case':<{width}}  {'python':>10}  {'compiled':>10}  {'speedup':>8}")
    for name, op, case_args in _cases():
        a = _first(getattr(py, op)(*case_args))
        b = _first(getattr(comp, op)(*case_args))
        if not (a == b or abs(a - b) <= 1e-10):
            raise AssertionError(f"{name}: backends disagree ({a!r} vs {b!r})")
        tp = _best_time(getattr(py, op), case_args, args.repeat)
        tc = _best_time(getattr(comp, op), case_args, args.repeat)
        print(f"{name:<{width}}  {tp * 1e3:>8.2f}ms  {tc * 1e3:>8.2f}ms  {tp / tc:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
