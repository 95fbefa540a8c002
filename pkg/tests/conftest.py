"""Shared fixtures and independent oracles used across the test suite.

Oracles here deliberately avoid the library's own solvers: binomial tails are
summed termwise from lgamma, KL is the textbook formula on aligned arrays, and
the constrained minimum of D(q||p) is computed by entropic mirror descent with
a bisection-based feasibility projection.
"""

import math

import numpy as np
import pytest


def rand_simplex(rng: np.random.Generator, k: int, floor: float = 1e-3) -> np.ndarray:
    """Random point of the k-simplex with every coordinate >= floor."""
    w = rng.dirichlet(np.ones(k))
    w = (w + floor) / (1.0 + k * floor)
    return w / w.sum()


def rand_values(rng: np.random.Generator, k: int, lo: float = -3.0, hi: float = 3.0) -> np.ndarray:
    """k strictly increasing values with a minimum gap, away from ties."""
    while True:
        v = np.sort(rng.uniform(lo, hi, size=k))
        if k == 1 or np.diff(v).min() > 1e-3:
            return v


def kl_ref(q: np.ndarray, p: np.ndarray) -> float:
    """Textbook KL for same-length prob vectors (0 log 0 = 0)."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    mask = q > 0
    if np.any(p[mask] <= 0):
        return math.inf
    return float(np.sum(q[mask] * np.log(q[mask] / p[mask])))


def binom_tail_log(n: int, p: float, kmin: int) -> float:
    """log P{Binomial(n, p) >= kmin} by termwise lgamma summation."""
    if kmin <= 0:
        return 0.0
    if kmin > n:
        return -math.inf
    lp, lq = math.log(p), math.log1p(-p)
    terms = [
        math.lgamma(n + 1) - math.lgamma(j + 1) - math.lgamma(n - j + 1) + j * lp + (n - j) * lq
        for j in range(kmin, n + 1)
    ]
    m = max(terms)
    return m + math.log(sum(math.exp(t - m) for t in terms))


def _project_mean(w_log: np.ndarray, fv: np.ndarray, alpha: float) -> np.ndarray:
    """Bregman (KL) projection of exp(w_log)/Z onto {q . fv = alpha} by bisection."""

    def tilted(tau: float) -> np.ndarray:
        z = w_log + tau * fv
        e = np.exp(z - z.max())
        return e / e.sum()

    def mean(tau: float) -> float:
        return float(tilted(tau) @ fv)

    lo, hi = -1.0, 1.0
    while mean(lo) > alpha and lo > -1e8:
        lo *= 2.0
    while mean(hi) < alpha and hi < 1e8:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mean(mid) < alpha:
            lo = mid
        else:
            hi = mid
    return tilted(0.5 * (lo + hi))


def mirror_descent_min(
    probs: np.ndarray, fv: np.ndarray, alpha: float, eta: float = 0.5, iters: int = 300
) -> float:
    """min D(q||p) over {q . fv = alpha} by entropic mirror descent.

    Multiplicative gradient steps q <- q * exp(-eta * grad D) followed by a
    KL projection back onto the constraint; purely primal, no Newton, no
    library calls.
    """
    logp = np.log(np.asarray(probs, dtype=float))
    fv = np.asarray(fv, dtype=float)
    q = _project_mean(logp.copy(), fv, alpha)
    d = float(np.sum(np.where(q > 0, q * (np.log(np.maximum(q, 1e-300)) - logp), 0.0)))
    for _ in range(iters):
        prev = d
        logq = np.log(np.maximum(q, 1e-300))
        grad = logq - logp + 1.0
        q = _project_mean(logq - eta * grad, fv, alpha)
        d = float(np.sum(np.where(q > 0, q * (np.log(np.maximum(q, 1e-300)) - logp), 0.0)))
        if abs(prev - d) < 1e-14:
            break
    return d


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
