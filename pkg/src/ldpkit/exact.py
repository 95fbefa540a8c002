"""Exact finite-sample probabilities of empirical-measure events.

Events decidable on count vectors are reduced by streaming over all type
classes of length n; probabilities are exact up to log-domain rounding.
Guards refuse enumerations beyond C(n+k-1, k-1) > 1e8 types.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterator, Sequence

import numpy as np

from ._backend import kernels
from ._logsum import LogSum
from .dist import FiniteDist, _align, fvalues, mean_f
from .errors import DomainError
from .iproject import iproject_inequality

_MAX_TYPES = 10**8

ObsFn = Callable[[float], float] | None


@dataclass(frozen=True)
class TypeVector:
    """Count vector of an n-sample over a k-letter support."""

    counts: tuple[int, ...]
    n: int

    def __post_init__(self):
        if any(c < 0 for c in self.counts) or sum(self.counts) != self.n:
            raise ValueError("counts must be nonnegative and sum to n")


@dataclass(frozen=True)
class Halfspace:
    """{Q : Q(f) >= alpha} (direction \">=\") or {Q : Q(f) <= alpha}."""

    f: ObsFn
    alpha: float
    direction: str = ">="

    def __post_init__(self):
        if self.direction not in (">=", "<="):
            raise ValueError("direction must be '>=' or '<='")


@dataclass(frozen=True)
class TvBall:
    """{Q : total variation distance to center <= radius}."""

    center: FiniteDist
    radius: float

    def __post_init__(self):
        if not 0 <= self.radius:
            raise ValueError("radius must be nonnegative")


@dataclass(frozen=True)
class Predicate:
    """Arbitrary decidable event; fn receives each empirical measure.

    Falls back to pure-Python enumeration (slow; the escape hatch for events
    with no vectorized reduction).
    """

    fn: Callable[[FiniteDist], bool]


EventSpec = Halfspace | TvBall | Predicate


def _guard(n: int, k: int) -> None:
    if n < 1 or k < 1:
        raise ValueError("need n >= 1 and k >= 1")
    if math.comb(n + k - 1, k - 1) > _MAX_TYPES:
        raise DomainError(
            "enumeration-too-large",
            f"{math.comb(n + k - 1, k - 1)} types at n={n}, k={k} exceeds the guard",
        )


def count_types(n: int, k: int) -> int:
    return math.comb(n + k - 1, k - 1)


def enumerate_types(n: int, k: int) -> Iterator[tuple[int, ...]]:
    """All count vectors of length k summing to n, ascending lexicographic."""
    _guard(n, k)
    return _gen(n, k)


def _gen(n: int, k: int) -> Iterator[tuple[int, ...]]:
    if k == 1:
        yield (n,)
        return
    for c0 in range(n + 1):
        for rest in _gen(n - c0, k - 1):
            yield (c0,) + rest


@lru_cache(maxsize=8)
def _lgtable(n: int) -> np.ndarray:
    t = np.array([math.lgamma(i + 1.0) for i in range(n + 1)])
    t.setflags(write=False)
    return t


def _safe_logp(p: FiniteDist) -> np.ndarray:
    # -1e300 instead of -inf keeps 0 * log(0) out of the dot products
    with np.errstate(divide="ignore"):
        lp = np.log(p.probs)
    return np.where(np.isfinite(lp), lp, -1e300)


def type_log_prob(t: TypeVector | Sequence[int], p: FiniteDist) -> float:
    """log of the multinomial probability of observing the type t under p."""
    counts = np.asarray(t.counts if isinstance(t, TypeVector) else t, dtype=np.int64)
    if counts.size != p.k:
        raise ValueError("type length must match the support size")
    if np.any(counts < 0):
        raise ValueError("negative count")
    n = int(counts.sum())
    pos = counts > 0
    if np.any(p.probs[pos] == 0):
        return -math.inf
    table = _lgtable(n)
    out = table[n] - table[counts].sum() + float(counts[pos] @ np.log(p.probs[pos]))
    return min(out, 0.0)


def _tv_params(p: FiniteDist, ball: TvBall, n: int):
    """Per-atom scaled center counts and the slack limit for the TV test.

    Center mass off supp(p) contributes a constant to the variation sum.
    """
    _, cq, pp = _align(ball.center, p)
    on = pp > 0  # these union atoms are exactly the atoms of p (p has distinct values)
    qn = n * cq[on]
    q_out = float(cq[~on].sum())
    limit = 2.0 * ball.radius * n - n * q_out
    return qn, limit


def _reduce_event(p: FiniteDist, n: int, event: EventSpec, want_coords: bool):
    _guard(n, p.k)
    logp = _safe_logp(p)
    table = _lgtable(n)
    if isinstance(event, Halfspace):
        fv = fvalues(p, event.f)
        side = 1 if event.direction == ">=" else -1
        return kernels.halfspace_reduce(n, logp, fv, n * event.alpha, side, table, want_coords)
    if isinstance(event, TvBall):
        qn, limit = _tv_params(p, event, n)
        if limit < 0:
            return -math.inf, (np.full(p.k, -math.inf) if want_coords else None)
        return kernels.tvball_reduce(n, logp, qn, limit, table, want_coords)
    if isinstance(event, Predicate):
        ev = LogSum()
        coords = [LogSum() for _ in range(p.k)] if want_coords else None
        for counts in _gen(n, p.k):
            arr = np.array(counts, dtype=np.int64)
            pos = arr > 0
            emp = FiniteDist(p.values[pos], arr[pos] / n)
            if not event.fn(emp):
                continue
            lw = float(table[n] - table[arr].sum() + arr @ logp)
            ev.add(lw)
            if want_coords:
                for x in range(p.k):
                    if counts[x] > 0:
                        coords[x].add(lw + math.log(counts[x]))
        out = np.array([c.value() for c in coords]) if want_coords else None
        return ev.value(), out
    raise TypeError(f"unsupported event {event!r}")


def event_log_prob(p: FiniteDist, n: int, event: EventSpec) -> float:
    """Exact log P{empirical measure of an n-sample from p lies in the event}."""
    val, _ = _reduce_event(p, n, event, want_coords=False)
    return min(val, 0.0)


def event_prob_exact(p: FiniteDist, n: int, event: EventSpec) -> float:
    return math.exp(event_log_prob(p, n, event))


def _mirror(f: ObsFn):
    if f is None:
        return lambda x: -x
    return lambda x: -f(x)


def halfspace_divergence(p: FiniteDist, event: Halfspace) -> float:
    """D(event || p): the least KL over measures in the halfspace."""
    if event.direction == ">=":
        return iproject_inequality(p, event.f, event.alpha).divergence
    return iproject_inequality(p, _mirror(event.f), -event.alpha).divergence


def sanov_bound_gap(p: FiniteDist, n: int, event: Halfspace) -> tuple[float, float]:
    """(exact log-probability, -n * D(event || p)).

    The second entry is a non-asymptotic upper bound on the first.
    """
    exact = event_log_prob(p, n, event)
    bound = -n * halfspace_divergence(p, event)
    return exact, bound


def gibbs_conditional(p: FiniteDist, n: int, event: EventSpec) -> FiniteDist:
    """Law of one coordinate of an n-sample conditioned on the event.

    Q_n(x) = E[T_x / n | T in event]; atoms that appear in no member type
    are dropped.
    """
    log_event, coords = _reduce_event(p, n, event, want_coords=True)
    if log_event == -math.inf:
        raise DomainError("conditioning-on-null", "event has probability zero")
    q = np.exp(coords - math.log(n) - log_event)
    pos = q > 0
    return FiniteDist(p.values[pos], q[pos] / q[pos].sum())
