"""Distributions on finite alphabets plus the two parametric families used
for continuous baselines (Gaussian, Exponential).

All divergence/distance operations align supports by value with an absolute
matching tolerance of 1e-12. Log-domain arithmetic with max subtraction is
used wherever exponentials could overflow.
"""

from __future__ import annotations

import math
from dataclasses import InitVar, dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

import numpy as np
from scipy.special import ndtri

from .errors import DomainError
from . import rng

ALIGN_TOL = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FiniteDist:
    """Probability measure with finitely many atoms on the real line.

    Atoms are stored sorted by value, values strictly increasing. Probabilities
    must be positive and sum to 1 within 1e-12; zero-probability atoms are
    rejected unless ``keep_zeros=True`` (used when a caller needs to retain
    the support of a reference measure, e.g. after extreme tilting).
    """

    values: np.ndarray
    probs: np.ndarray
    keep_zeros: InitVar[bool] = False

    def __post_init__(self, keep_zeros: bool):
        v = np.asarray(self.values, dtype=float).ravel()
        p = np.asarray(self.probs, dtype=float).ravel()
        if v.size == 0:
            raise ValueError("empty support")
        if v.size != p.size:
            raise ValueError("values and probs length mismatch")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite support value")
        order = np.argsort(v, kind="stable")
        v, p = v[order], p[order]
        if np.any(np.diff(v) <= 0):
            raise ValueError("support values must be distinct")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite and nonnegative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        if np.any(p == 0) and not keep_zeros:
            raise ValueError("zero-probability atom (pass keep_zeros=True to retain)")
        object.__setattr__(self, "values", _readonly(v))
        object.__setattr__(self, "probs", _readonly(p))

    @property
    def k(self) -> int:
        return self.values.size

    def approx_eq(self, other: "FiniteDist", tol: float = 1e-12) -> bool:
        """Atomwise equality of supports and probabilities within tol."""
        return (
            self.k == other.k
            and bool(np.all(np.abs(self.values - other.values) <= tol))
            and bool(np.all(np.abs(self.probs - other.probs) <= tol))
        )


@dataclass(frozen=True)
class Gaussian:
    mu: float
    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma) and math.isfinite(self.mu)):
            raise ValueError("need finite mu and sigma > 0")


@dataclass(frozen=True)
class Exponential:
    """Density rate*exp(-rate*x) on [0, inf)."""

    rate: float

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValueError("need finite rate > 0")


Dist = FiniteDist | Gaussian | Exponential


def fvalues(dist: FiniteDist, f: Callable[[float], float] | None) -> np.ndarray:
    """f evaluated on the support (identity when f is None)."""
    if f is None:
        return np.asarray(dist.values, dtype=float)
    out = np.array([float(f(v)) for v in dist.values], dtype=float)
    if not np.all(np.isfinite(out)):
        raise ValueError("f must be finite on the support")
    return out


def mean_f(dist: Dist, f: Callable[[float], float] | None = None) -> float:
    if isinstance(dist, FiniteDist):
        fv = fvalues(dist, f)
        return float(np.dot(dist.probs, fv))
    if f is not None:
        raise ValueError("parametric distributions support identity f only")
    if isinstance(dist, Gaussian):
        return dist.mu
    return 1.0 / dist.rate


def var_f(dist: Dist, f: Callable[[float], float] | None = None) -> float:
    if isinstance(dist, FiniteDist):
        fv = fvalues(dist, f)
        m = float(np.dot(dist.probs, fv))
        return float(np.dot(dist.probs, (fv - m) ** 2))
    if f is not None:
        raise ValueError("parametric distributions support identity f only")
    if isinstance(dist, Gaussian):
        return dist.sigma**2
    return 1.0 / dist.rate**2


def _align(a: FiniteDist, b: FiniteDist, tol: float = ALIGN_TOL):
    """Merge supports by value (absolute tolerance tol).

    Returns (union_values, probs_a, probs_b) on the merged grid.
    """
    vals = np.concatenate([a.values, b.values])
    src = np.concatenate([np.zeros(a.k, dtype=int), np.ones(b.k, dtype=int)])
    order = np.argsort(vals, kind="stable")
    uv: list[float] = []
    pa: list[float] = []
    pb: list[float] = []
    for i in order:
        v = float(vals[i])
        if not uv or v - uv[-1] > tol:
            uv.append(v)
            pa.append(0.0)
            pb.append(0.0)
        p = float(a.probs[i] if src[i] == 0 else b.probs[i - a.k])
        if src[i] == 0:
            pa[-1] += p
        else:
            pb[-1] += p
    return np.array(uv), np.array(pa), np.array(pb)


def kl_divergence(q: FiniteDist, p: FiniteDist) -> float:
    """D(q || p); +inf when q is not absolutely continuous w.r.t. p."""
    _, qa, pa = _align(q, p)
    mask = qa > 0
    if np.any(pa[mask] == 0):
        return math.inf
    d = float(np.sum(qa[mask] * np.log(qa[mask] / pa[mask])))
    return max(d, 0.0)


def tv_distance(q: FiniteDist, p: FiniteDist) -> float:
    _, qa, pa = _align(q, p)
    return 0.5 * float(np.abs(qa - pa).sum())


def relative_varentropy(q: FiniteDist, p: FiniteDist) -> float:
    """Variance under q of the log-likelihood ratio log(dq/dp)."""
    _, qa, pa = _align(q, p)
    mask = qa > 0
    if np.any(pa[mask] == 0):
        raise DomainError("not-absolutely-continuous", "q puts mass outside supp(p)")
    io = np.log(qa[mask] / pa[mask])
    d = float(np.dot(qa[mask], io))
    v = float(np.dot(qa[mask], (io - d) ** 2))
    return max(v, 0.0)


def tilt(p: FiniteDist, f: Callable[[float], float] | None, lam: float) -> FiniteDist:
    """Exponential tilt: q_i proportional to p_i * exp(lam * f(v_i)).

    The returned measure keeps the support of p (atoms may underflow to
    probability zero for extreme lam; they are retained).
    """
    if not math.isfinite(lam):
        raise ValueError("lam must be finite")
    fv = fvalues(p, f)
    with np.errstate(divide="ignore"):
        logw = np.log(p.probs) + lam * fv
    w = np.exp(logw - logw.max())
    q = w / w.sum()
    return FiniteDist(p.values, q, keep_zeros=True)


def condition(p: FiniteDist, event: Callable[[float], bool] | np.ndarray) -> FiniteDist:
    """Restriction of p to the atoms where event holds, renormalized."""
    if callable(event):
        mask = np.array([bool(event(v)) for v in p.values])
    else:
        mask = np.asarray(event, dtype=bool)
        if mask.shape != (p.k,):
            raise ValueError("mask length mismatch")
    mass = float(p.probs[mask].sum())
    if mass <= 0.0:
        raise DomainError("conditioning-on-null", "event has probability zero")
    return FiniteDist(p.values[mask], p.probs[mask] / mass)


@dataclass(frozen=True)
class LatticeInfo:
    """Lattice structure of a value set: v in offset + step*Z for all values.

    ``step`` is the maximal such step; None when undefined (single value) or
    when the set is not a lattice.
    """

    is_lattice: bool
    step: float | None
    offset: float


def _fgcd(a: float, b: float, tol: float) -> float:
    # Euclid on floats; remainders within tol of 0 or of the divisor snap to 0.
    while b > tol:
        r = math.fmod(a, b)
        if b - r <= tol:
            r = 0.0
        a, b = b, r
    return a


def _index_residual_ok(e: np.ndarray, d: float) -> bool:
    m = np.rint(e / d)
    return bool(np.all(m >= 1) and np.all(np.abs(e / d - m) <= 1e-9))


def lattice_structure(values: Iterable[float]) -> LatticeInfo:
    """Detect a common step for a finite value set.

    Values within 1e-9 * max|value| of each other count as one point.
    Floating GCD via Euclid on differences (termination threshold
    1e-9 * max|value|), validated by the index residuals |v - offset|/step
    being within 1e-9 of integers. Sets whose difference ratios admit no
    rational approximation of denominator <= 1e6 at that accuracy are
    declared non-lattice.
    """
    v = np.unique(np.asarray(list(values), dtype=float))
    if v.size == 0:
        raise ValueError("empty value set")
    tol = 1e-9 * float(np.abs(v).max())
    if v.size > 1 and tol > 0.0:
        # values closer than the detection tolerance are the same point;
        # keeping both would feed a junk difference into the gcd
        keep = [float(v[0])]
        for x in v[1:]:
            if x - keep[-1] > tol:
                keep.append(float(x))
        v = np.array(keep)
    offset = float(v[0])
    if v.size == 1:
        return LatticeInfo(True, None, offset)
    e = v[1:] - v[0]
    g = 0.0
    for x in e:
        g = _fgcd(float(x), g, tol)
    d = None
    if g > tol and _index_residual_ok(e, g):
        d = g
    else:
        # rational repair of the difference ratios
        base = float(e[0])
        fracs = [Fraction(float(x) / base).limit_denominator(10**6) for x in e]
        lcm = 1
        for fr in fracs:
            lcm = lcm * fr.denominator // math.gcd(lcm, fr.denominator)
            if lcm > 10**6:
                return LatticeInfo(False, None, offset)
        ms = [fr.numerator * (lcm // fr.denominator) for fr in fracs]
        common = 0
        for m in ms:
            common = math.gcd(common, m)
        cand = base * common / lcm
        if _index_residual_ok(e, cand):
            d = cand
    if d is None:
        return LatticeInfo(False, None, offset)
    # least-squares polish against the integer indices, then recheck
    m = np.rint(e / d)
    d = float(np.dot(e, m) / np.dot(m, m))
    if not _index_residual_ok(e, d):
        return LatticeInfo(False, None, offset)
    return LatticeInfo(True, d, offset)


def sample(dist: Dist, n: int, seed: int, worker: int = 0) -> np.ndarray:
    """n draws via inverse CDF from the (seed, worker) Philox stream."""
    gen = rng.stream(seed, worker)
    u = gen.random(n)
    if isinstance(dist, FiniteDist):
        cdf = np.cumsum(dist.probs)
        cdf[-1] = 1.0
        return dist.values[np.searchsorted(cdf, u, side="right")]
    if isinstance(dist, Gaussian):
        return dist.mu + dist.sigma * ndtri(np.clip(u, 1e-300, None))
    return -np.log1p(-u) / dist.rate
