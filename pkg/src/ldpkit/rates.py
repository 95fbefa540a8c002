"""Cumulant generating functions and convex-dual rate computations.

The dual maximization sup_lam (lam*alpha - cgf(lam)) is resolved by case:
interior alpha solves cgf'(lam) = alpha by safeguarded Newton inside a grown
bracket; alpha at the edge of the attainable mean range reduces to the mass
of the extreme level set; a finite cgf domain whose derivative stays below
alpha yields the linear boundary value (flagged "dual_boundary", no
attaining tilt); alpha beyond the attainable range has an infinite rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .dist import (
    Dist,
    Exponential,
    FiniteDist,
    Gaussian,
    condition,
    fvalues,
    kl_divergence,
)
from .errors import DomainError
from . import _hull

INTERIOR = "interior"
AT_ALPHA_MAX = "at_alpha_max"
BEYOND_ALPHA_MAX = "beyond_alpha_max"
DUAL_BOUNDARY = "dual_boundary"

# residual tolerance for the inner solve: |cgf'(lam) - alpha| <= _SOLVE_TOL*(1+|alpha|)
_SOLVE_TOL = 1e-13
_MAX_ITER = 200


@dataclass(frozen=True)
class ClosedFormCgf:
    """A user-supplied cumulant generating function on an interval domain.

    ``fn`` must be finite on (lambda_min, lambda_max) and at any included
    endpoint; derivatives default to central differences with Richardson
    extrapolation. ``alpha_max``/``alpha_min`` may declare the limits of the
    derivative at the domain edges; otherwise they are probed numerically.
    """

    fn: Callable[[float], float]
    lambda_min: float = -math.inf
    lambda_max: float = math.inf
    min_in_domain: bool = False
    max_in_domain: bool = False
    d1: Callable[[float], float] | None = None
    d2: Callable[[float], float] | None = None
    alpha_min: float | None = None
    alpha_max: float | None = None

    def __post_init__(self):
        if not self.lambda_min < 0 < self.lambda_max:
            raise ValueError("domain must contain a neighborhood of 0")


@dataclass(frozen=True)
class CgfSpec:
    """Base distribution with an observable f, or a closed-form cgf."""

    base: Dist | None = None
    f: Callable[[float], float] | None = None
    closed_form: ClosedFormCgf | None = None

    def __post_init__(self):
        if (self.base is None) == (self.closed_form is None):
            raise ValueError("specify exactly one of base or closed_form")
        if self.closed_form is not None and self.f is not None:
            raise ValueError("f applies to a base distribution only")


@dataclass(frozen=True)
class RatePoint:
    """One point of a rate function together with its dual data.

    ``lambda_star`` is the attaining tilt parameter (None when no finite
    maximizer exists); ``tilted`` is the tilted/conditioned measure when one
    is representable. ``boundary`` is one of "interior", "at_alpha_max",
    "beyond_alpha_max", "dual_boundary" (the last marks a finite cgf domain
    edge, where the supremum is linear in alpha and unattained).
    """

    alpha: float | tuple[float, ...]
    gamma: float
    lambda_star: float | tuple[float, ...] | None
    tilted: Dist | None
    boundary: str


class _Core:
    """Uniform view of a CgfSpec: value/derivatives, domain, support data."""

    def __init__(self, spec: CgfSpec):
        self.spec = spec
        base = spec.base
        self.kind = "closed"
        self.lam_min, self.lam_max = -math.inf, math.inf
        self.min_in, self.max_in = False, False
        self.esssup = self.essinf = None  # sup/inf of f, with atom mass if finite
        self.sup_mass = self.inf_mass = 0.0
        if isinstance(base, FiniteDist):
            self.kind = "finite"
            self._fv = fvalues(base, spec.f)
            with np.errstate(divide="ignore"):
                self._logp = np.log(base.probs)
            pos = base.probs > 0  # retained zero atoms are not support
            self.esssup = float(self._fv[pos].max())
            self.essinf = float(self._fv[pos].min())
            self.sup_mass = float(base.probs[self._fv == self.esssup].sum())
            self.inf_mass = float(base.probs[self._fv == self.essinf].sum())
        elif isinstance(base, Gaussian):
            self.kind = "gaussian"
        elif isinstance(base, Exponential):
            self.kind = "exponential"
            self.lam_max = base.rate  # cgf diverges at the rate parameter
            self.essinf, self.inf_mass = 0.0, 0.0
        elif spec.closed_form is not None:
            cf = spec.closed_form
            self.lam_min, self.lam_max = cf.lambda_min, cf.lambda_max
            self.min_in, self.max_in = cf.min_in_domain, cf.max_in_domain
        self.mean = self.d1(0.0)

    # -- evaluation ---------------------------------------------------------

    def in_domain(self, lam: float) -> bool:
        if self.lam_min < lam < self.lam_max:
            return True
        if lam == self.lam_min:
            return self.min_in
        if lam == self.lam_max:
            return self.max_in
        return False

    def value(self, lam: float) -> float:
        if not self.in_domain(lam):
            return math.inf
        if self.kind == "finite":
            z = self._logp + lam * self._fv
            m = z.max()
            return float(m + math.log(np.exp(z - m).sum()))
        if self.kind == "gaussian":
            g = self.spec.base
            return g.mu * lam + 0.5 * (g.sigma * lam) ** 2
        if self.kind == "exponential":
            return -math.log1p(-lam / self.spec.base.rate)
        return float(self.spec.closed_form.fn(lam))

    def _weights(self, lam: float) -> np.ndarray:
        z = self._logp + lam * self._fv
        w = np.exp(z - z.max())
        return w / w.sum()

    def d1(self, lam: float) -> float:
        if self.kind == "finite":
            return float(np.dot(self._weights(lam), self._fv))
        if self.kind == "gaussian":
            g = self.spec.base
            return g.mu + g.sigma**2 * lam
        if self.kind == "exponential":
            return 1.0 / (self.spec.base.rate - lam)
        cf = self.spec.closed_form
        if cf.d1 is not None:
            return float(cf.d1(lam))
        return self._fd(self.value, lam)

    def d2(self, lam: float) -> float:
        if self.kind == "finite":
            w = self._weights(lam)
            m = float(np.dot(w, self._fv))
            return float(np.dot(w, (self._fv - m) ** 2))
        if self.kind == "gaussian":
            return self.spec.base.sigma**2
        if self.kind == "exponential":
            return 1.0 / (self.spec.base.rate - lam) ** 2
        cf = self.spec.closed_form
        if cf.d2 is not None:
            return float(cf.d2(lam))
        return self._fd(self.d1, lam)

    def _fd(self, fn: Callable[[float], float], lam: float) -> float:
        # centered difference + one Richardson step, h shrunk near domain edges
        h = 1e-6 * (1.0 + abs(lam))
        room = min(self.lam_max - lam, lam - self.lam_min)
        if room < 2 * h:
            h = room / 4
        d_h = (fn(lam + h) - fn(lam - h)) / (2 * h)
        d_h2 = (fn(lam + h / 2) - fn(lam - h / 2)) / h
        return (4 * d_h2 - d_h) / 3

    def tilted(self, lam: float) -> Dist | None:
        if self.kind == "finite":
            from .dist import tilt

            return tilt(self.spec.base, self.spec.f, lam)
        if self.kind == "gaussian":
            g = self.spec.base
            return Gaussian(g.mu + g.sigma**2 * lam, g.sigma)
        if self.kind == "exponential":
            return Exponential(self.spec.base.rate - lam)
        return None

    # -- derivative range ---------------------------------------------------

    def alpha_limit(self, side: int) -> float:
        """Limit of cgf' toward the domain edge in direction side (+1/-1)."""
        if self.kind == "finite":
            return self.esssup if side > 0 else self.essinf
        if self.kind == "gaussian":
            return math.inf if side > 0 else -math.inf
        if self.kind == "exponential":
            return math.inf if side > 0 else 0.0
        cf = self.spec.closed_form
        declared = cf.alpha_max if side > 0 else cf.alpha_min
        if declared is not None:
            return declared
        edge = self.lam_max if side > 0 else self.lam_min
        if math.isinf(edge):
            probe = side * 2.0**40
            return self.d1(probe)
        eps = max(1e-9 * (1.0 + abs(edge)), 1e-12)
        return self.d1(edge - side * eps)


def cgf(spec: CgfSpec, lam: float) -> float:
    """Log moment generating function; +inf outside its effective domain."""
    return _Core(spec).value(lam)


def _solve_interior(core: _Core, alpha: float) -> float:
    """Solve cgf'(lam) = alpha for alpha strictly inside the mean range.

    Works in the directional coordinate u = side*lam >= 0 (side is the sign
    of alpha - mean), where h(u) = side*cgf'(side*u) is increasing; brackets
    by geometric growth from u = 1 toward the domain edge, then runs
    safeguarded Newton inside the bracket.
    """
    side = 1 if alpha > core.mean else -1
    target = side * alpha
    u_edge = side * (core.lam_max if side > 0 else core.lam_min)  # > 0, may be inf

    def h(u: float) -> float:
        return side * core.d1(side * u)

    u_lo = 0.0
    u = 1.0 if math.isinf(u_edge) else u_edge / 2
    u_hi = None
    for _ in range(300):
        if h(u) >= target:
            u_hi = u
            break
        u_lo = u
        u = u * 2 if math.isinf(u_edge) else (u + u_edge) / 2
        if u > 1e300:
            break
    if u_hi is None:
        raise DomainError("no-interior-solution", "bracket growth exhausted")
    x = 0.5 * (u_lo + u_hi)
    tol = _SOLVE_TOL * (1.0 + abs(alpha))
    for _ in range(_MAX_ITER):
        r = h(x) - target
        if abs(r) <= tol:
            break
        if r < 0:
            u_lo = x
        else:
            u_hi = x
        v = core.d2(side * x)  # = h'(x)
        x_new = x - r / v if v > 0 else math.inf
        # closed bracket: the root may sit exactly on an endpoint
        if not (u_lo <= x_new <= u_hi) or x_new == x or not math.isfinite(x_new):
            x_new = 0.5 * (u_lo + u_hi)
        if u_hi - u_lo <= 4 * math.ulp(max(abs(u_lo), abs(u_hi), 1.0)):
            x = x_new
            break
        x = x_new
    return side * x


def _zero_point(core: _Core, alpha: float) -> RatePoint:
    return RatePoint(alpha, 0.0, 0.0, core.tilted(0.0), INTERIOR)


def _edge_point(core: _Core, alpha: float, side: int) -> RatePoint:
    """alpha at the attainable-range edge: rate is -log(mass of the level set)."""
    mass = core.sup_mass if side > 0 else core.inf_mass
    if mass > 0.0:
        extreme = core.esssup if side > 0 else core.essinf
        tilted = condition(core.spec.base, core._fv == extreme)
        return RatePoint(alpha, -math.log(mass), None, tilted, AT_ALPHA_MAX)
    return RatePoint(alpha, math.inf, None, None, AT_ALPHA_MAX)


def rate_equality(spec: CgfSpec, alpha: float) -> RatePoint:
    """Rate of {empirical mean of f == alpha}: the convex dual at alpha."""
    core = _Core(spec)
    if alpha == core.mean:
        return _zero_point(core, alpha)
    side = 1 if alpha > core.mean else -1
    a_edge = core.alpha_limit(side)
    inside = alpha < a_edge if side > 0 else alpha > a_edge
    if inside:
        lam = _solve_interior(core, alpha)
        gamma = max(lam * alpha - core.value(lam), 0.0)
        return RatePoint(alpha, gamma, lam, core.tilted(lam), INTERIOR)
    # alpha at or beyond the reachable mean range
    if core.kind in ("finite", "exponential"):
        extreme = core.esssup if side > 0 else core.essinf
        if extreme is not None:
            tol = 1e-12 * max(1.0, abs(extreme))
            if abs(alpha - extreme) <= tol:
                return _edge_point(core, alpha, side)
            return RatePoint(alpha, math.inf, None, None, BEYOND_ALPHA_MAX)
    # closed-form cgf: a finite domain edge with finite cgf gives the linear
    # boundary value; otherwise classify numerically against the probed limit
    edge = core.lam_max if side > 0 else core.lam_min
    edge_in = core.max_in if side > 0 else core.min_in
    if not math.isinf(edge) and edge_in:
        gamma = edge * alpha - core.value(edge)
        return RatePoint(alpha, gamma, None, None, DUAL_BOUNDARY)
    if abs(alpha - a_edge) <= 1e-9 * (1.0 + abs(alpha)):
        probe = edge if not math.isinf(edge) else (2.0**40 if side > 0 else -(2.0**40))
        lam = probe if core.in_domain(probe) else probe * (1 - 1e-9)
        gamma = lam * alpha - core.value(lam)
        return RatePoint(alpha, gamma, None, None, AT_ALPHA_MAX)
    return RatePoint(alpha, math.inf, None, None, BEYOND_ALPHA_MAX)


def rate_inequality(spec: CgfSpec, alpha: float) -> RatePoint:
    """Rate of the upper tail {empirical mean >= alpha}; zero at or below the mean."""
    core = _Core(spec)
    if alpha <= core.mean:
        return _zero_point(core, alpha)
    return rate_equality(spec, alpha)


def rate_lower(spec: CgfSpec, alpha: float) -> RatePoint:
    """Rate of the lower tail {empirical mean <= alpha}; zero at or above the mean."""
    core = _Core(spec)
    if alpha >= core.mean:
        return _zero_point(core, alpha)
    return rate_equality(spec, alpha)


def rate_closed_set(
    spec: CgfSpec, intervals: Sequence[tuple[float, float]]
) -> tuple[float, float | None]:
    """Infimum of the rate over a union of closed intervals.

    Returns (value, attaining alpha); (inf, None) for an empty union. The
    infimum sits at the mean when covered, else at the interval endpoint
    nearest the mean (the rate is unimodal around the mean).
    """
    if len(intervals) > 8:
        raise ValueError("at most 8 intervals")
    core = _Core(spec)
    best, best_alpha = math.inf, None
    for a, b in intervals:
        if not a <= b:
            raise ValueError(f"empty interval ({a}, {b})")
        if a <= core.mean <= b:
            return 0.0, core.mean
        alpha = a if a > core.mean else b
        if math.isinf(alpha):
            continue  # rate grows toward infinity on that side
        g = rate_equality(spec, alpha).gamma
        if g < best:
            best, best_alpha = g, alpha
    return best, best_alpha


# -- vector case -------------------------------------------------------------


@dataclass(frozen=True)
class FiniteVectorDist:
    """Finitely supported measure on R^d given by points (m, d) and probs."""

    points: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        pr = np.array(self.probs, dtype=float)
        if pts.ndim != 2 or pts.shape[0] != pr.size or pts.shape[0] == 0:
            raise ValueError("points must be (m, d) with matching probs")
        if np.any(pr <= 0) or abs(pr.sum() - 1.0) > 1e-12:
            raise ValueError("probs must be positive and sum to 1")
        pts.setflags(write=False)
        pr.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "probs", pr)


def _affine_reduce(points: np.ndarray, probs: np.ndarray | None):
    """Coordinates of the points in their affine hull.

    Returns (center, basis (d, r), coords (m, r)); probs None centers at the
    unweighted mean. Raises "degenerate-support" when the numerical rank is
    ambiguous.
    """
    center = points.mean(axis=0) if probs is None else probs @ points
    c = points - center
    if points.shape[0] == 1:
        basis = np.zeros((points.shape[1], 0))
        return center, basis, np.zeros((1, 0))
    _, s, vt = np.linalg.svd(c, full_matrices=False)
    smax = s.max() if s.size else 0.0
    if smax == 0.0:
        return center, np.zeros((points.shape[1], 0)), np.zeros((points.shape[0], 0))
    big = s > 1e-9 * smax
    small = s < 1e-13 * smax
    if np.any(~big & ~small):
        raise DomainError("degenerate-support", "affine rank is numerically ambiguous")
    basis = vt[big].T
    return center, basis, c @ basis


def _newton_dual(coords: np.ndarray, logp: np.ndarray, target: np.ndarray, start=None):
    """Damped Newton for sup_lam <lam, target> - log sum p exp(<lam, x>).

    coords must affinely span their space and target must lie in the relative
    interior of their convex hull. Returns (lam, value, weights).
    """
    r = coords.shape[1]
    lam = np.zeros(r) if start is None else np.array(start, dtype=float)

    def eval_at(lm):
        z = logp + coords @ lm
        m = z.max()
        logz = m + math.log(np.exp(z - m).sum())
        w = np.exp(z - logz)
        return float(lm @ target - logz), w

    g, w = eval_at(lam)
    tol = 1e-13 * (1.0 + float(np.abs(target).max(initial=0.0)))
    for _ in range(_MAX_ITER):
        mean = w @ coords
        resid = target - mean
        if float(np.abs(resid).max(initial=0.0)) <= tol:
            break
        cov = coords.T @ (coords * w[:, None]) - np.outer(mean, mean)
        try:
            step = np.linalg.solve(cov, resid)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(cov, resid, rcond=None)[0]
        t = 1.0
        for _ in range(60):
            g_new, w_new = eval_at(lam + t * step)
            if g_new >= g:
                lam, g, w = lam + t * step, g_new, w_new
                break
            t /= 2
        else:
            break  # no ascent available: converged to numerical precision
    return lam, g, w


def rate_vector(dist: FiniteVectorDist, alpha: Sequence[float]) -> RatePoint:
    """Rate at a vector mean for a finitely supported measure on R^d, d <= 3."""
    pts, probs = dist.points, dist.probs
    d = pts.shape[1]
    if d > 3:
        raise ValueError("dimension at most 3")
    a = np.asarray(alpha, dtype=float)
    if a.shape != (d,):
        raise ValueError("alpha dimension mismatch")
    scale = 1.0 + float(np.abs(pts).max())
    center, basis, coords = _affine_reduce(pts, probs)
    a_red = (a - center) @ basis
    back = center + basis @ a_red
    if float(np.abs(a - back).max(initial=0.0)) > 1e-9 * scale:
        return RatePoint(tuple(a), math.inf, None, None, BEYOND_ALPHA_MAX)
    if coords.shape[1] == 0:
        return RatePoint(tuple(a), 0.0, tuple(np.zeros(d)), None, INTERIOR)
    status, face = _hull.classify(coords, a_red, 1e-9 * scale)
    if status == "outside":
        return RatePoint(tuple(a), math.inf, None, None, BEYOND_ALPHA_MAX)
    if status == "boundary":
        mass = float(probs[face].sum())
        sub = FiniteVectorDist(pts[face], probs[face] / mass)
        inner = rate_vector(sub, a)
        return RatePoint(tuple(a), -math.log(mass) + inner.gamma, None, None, AT_ALPHA_MAX)
    lam_r, gamma, _ = _newton_dual(coords, np.log(probs), a_red)
    lam = basis @ lam_r
    return RatePoint(tuple(a), max(gamma, 0.0), tuple(lam), None, INTERIOR)
