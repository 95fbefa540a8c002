"""Additive functionals of finite-state Markov chains.

The limiting cumulant generating function of (1/n) sum f(X_t) is the log
Perron root of the tilted transfer matrix T[i][j] = P[i][j] exp(lam f[j]).
Rates follow by convex duality; exact finite-n tail probabilities come from
a forward DP over (step, state, lattice-index sum) in log space when f takes
values on a lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ._backend import kernels
from .dist import lattice_structure
from .errors import DomainError, ParseError
from .rates import AT_ALPHA_MAX, BEYOND_ALPHA_MAX, INTERIOR, RatePoint

_PERRON_TOL = 1e-13
_PERRON_MAX_ITER = 100_000
_DP_CELLS = 10**7


def _reachable(adj: np.ndarray, start: int) -> np.ndarray:
    seen = np.zeros(adj.shape[0], dtype=bool)
    stack = [start]
    seen[start] = True
    while stack:
        i = stack.pop()
        for j in np.flatnonzero(adj[i]):
            if not seen[j]:
                seen[j] = True
                stack.append(int(j))
    return seen


@dataclass(frozen=True)
class MarkovModel:
    """Irreducible row-stochastic chain with a per-state observable f."""

    transition: np.ndarray
    initial: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        t = np.array(self.transition, dtype=float)
        ini = np.array(self.initial, dtype=float).ravel()
        fv = np.array(self.f, dtype=float).ravel()
        k = fv.size
        if t.shape != (k, k) or ini.size != k or k < 1:
            raise ValueError("transition must be (k, k) with matching initial and f")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(ini)) and np.all(np.isfinite(fv))):
            raise ValueError("non-finite entry")
        if np.any(t < 0) or np.any(np.abs(t.sum(axis=1) - 1.0) > 1e-9):
            raise DomainError("not-stochastic", "rows must be nonnegative and sum to 1 (1e-9)")
        if np.any(ini < 0) or abs(ini.sum() - 1.0) > 1e-9:
            raise DomainError("not-stochastic", "initial must be a distribution (1e-9)")
        t = t / t.sum(axis=1, keepdims=True)
        ini = ini / ini.sum()
        adj = t > 0
        if not (_reachable(adj, 0).all() and _reachable(adj.T, 0).all()):
            raise DomainError("not-irreducible", "chain is not irreducible")
        t.setflags(write=False)
        ini.setflags(write=False)
        fv.setflags(write=False)
        object.__setattr__(self, "transition", t)
        object.__setattr__(self, "initial", ini)
        object.__setattr__(self, "f", fv)

    @property
    def k(self) -> int:
        return self.f.size


def load_model(path: str) -> MarkovModel:
    """Read a model from plain text.

    Line 1 is k, lines 2..k+1 the transition rows, line k+2 the initial
    probabilities, line k+3 the f values. Blank lines and #-comments are
    ignored.
    """
    try:
        with open(path) as fh:
            lines = [
                ln for ln in (raw.split("#", 1)[0].strip() for raw in fh) if ln
            ]
    except OSError as exc:
        raise ParseError(f"cannot read model file {path}: {exc}")
    if not lines:
        raise ParseError(f"model file {path} is empty")
    try:
        k = int(lines[0])
    except ValueError:
        raise ParseError(f"line 1 must be the state count, got {lines[0]!r}")
    if k < 1:
        raise ParseError(f"state count must be positive, got {k}")
    if len(lines) != k + 3:
        raise ParseError(f"expected {k + 3} lines (k, {k} rows, initial, f), got {len(lines)}")

    def row(text: str, lineno: int) -> list[float]:
        parts = text.replace(",", " ").split()
        if len(parts) != k:
            raise ParseError(f"line {lineno}: expected {k} numbers, got {len(parts)}")
        try:
            return [float(x) for x in parts]
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}")

    transition = [row(lines[1 + i], 2 + i) for i in range(k)]
    initial = row(lines[k + 1], k + 2)
    f = row(lines[k + 2], k + 3)
    try:
        return MarkovModel(transition, initial, f)
    except ValueError as exc:
        raise ParseError(f"malformed model file: {exc}")


def _perron_root(t: np.ndarray) -> float:
    """Perron root of a nonnegative irreducible matrix.

    2x2 uses the closed form; otherwise power iteration on t + I (the shift
    guarantees convergence for periodic chains).
    """
    k = t.shape[0]
    if k == 1:
        return float(t[0, 0])
    if k == 2:
        tr = t[0, 0] + t[1, 1]
        disc = (t[0, 0] - t[1, 1]) ** 2 + 4.0 * t[0, 1] * t[1, 0]
        return float((tr + math.sqrt(disc)) / 2.0)
    a = t + np.eye(k)
    v = np.full(k, 1.0 / k)
    rho = 0.0
    for _ in range(_PERRON_MAX_ITER):
        w = a @ v
        rho_new = float(w.sum())
        v = w / rho_new
        if abs(rho_new - rho) <= _PERRON_TOL * rho_new:
            return rho_new - 1.0
        rho = rho_new
    return rho - 1.0


def markov_cgf(model: MarkovModel, lam: float) -> float:
    """Limiting cgf of the additive functional: log Perron root of the tilt."""
    if not math.isfinite(lam):
        raise ValueError("lam must be finite")
    # factor out the dominant column scale so every exponent is <= 0
    ref = float(model.f.max()) if lam >= 0 else float(model.f.min())
    scaled = model.transition * np.exp(lam * (model.f - ref))[None, :]
    return lam * ref + math.log(_perron_root(scaled))


def _cgf_d1(model: MarkovModel, lam: float) -> float:
    # centered difference with one Richardson step
    h = 1e-6 * (1.0 + abs(lam))
    d_h = (markov_cgf(model, lam + h) - markov_cgf(model, lam - h)) / (2 * h)
    d_h2 = (markov_cgf(model, lam + h / 2) - markov_cgf(model, lam - h / 2)) / h
    return (4 * d_h2 - d_h) / 3


def stationary(model: MarkovModel) -> np.ndarray:
    k = model.k
    a = model.transition.T - np.eye(k)
    a[-1, :] = 1.0
    b = np.zeros(k)
    b[-1] = 1.0
    pi = np.linalg.solve(a, b)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def markov_rate(model: MarkovModel, alpha: float) -> RatePoint:
    """Convex dual of the limiting cgf at alpha.

    Interior alphas (inside the range of the cgf derivative) solve
    cgf'(lam) = alpha; alphas at the range edge get the saturated dual value,
    beyond it the rate is infinite.
    """
    alpha = float(alpha)
    mean = float(stationary(model) @ model.f)
    if alpha == mean:
        return RatePoint(alpha, 0.0, 0.0, None, INTERIOR)
    fmin, fmax = float(model.f.min()), float(model.f.max())
    spread = fmax - fmin
    if spread == 0.0:
        return RatePoint(alpha, math.inf, None, None, BEYOND_ALPHA_MAX)
    side = 1 if alpha > mean else -1
    # beyond this the tilted matrix is numerically saturated on the extreme states
    cap = 1500.0 / spread
    edge = _cgf_d1(model, side * cap)
    if abs(alpha - edge) <= 1e-7 * (1.0 + abs(alpha)):
        # the derivative range is open; its closure is only reached by
        # conditioning on extreme paths, so no finite multiplier is reported
        gamma = cap * side * alpha - markov_cgf(model, side * cap)
        return RatePoint(alpha, max(gamma, 0.0), None, None, AT_ALPHA_MAX)
    if side * (alpha - edge) > 0:
        return RatePoint(alpha, math.inf, None, None, BEYOND_ALPHA_MAX)

    def resid(lam: float) -> float:
        return _cgf_d1(model, lam) - alpha

    lo, hi = 0.0, 0.0
    u = min(1.0, cap)
    bracketed = False
    while u <= cap:
        lam = side * u
        if side * resid(lam) >= 0:
            lo, hi = (0.0, lam) if side > 0 else (lam, 0.0)
            bracketed = True
            break
        if u == cap:
            break
        u = min(u * 2, cap)
    if not bracketed:
        lo, hi = (0.0, side * cap) if side > 0 else (side * cap, 0.0)
    lam_star = float(brentq(resid, lo, hi, xtol=1e-12, rtol=8.9e-16, maxiter=200))
    gamma = max(lam_star * alpha - markov_cgf(model, lam_star), 0.0)
    return RatePoint(alpha, gamma, lam_star, None, INTERIOR)


def markov_tail_log(model: MarkovModel, alpha: float, n: int) -> float:
    """Exact log P{f(X_1) + ... + f(X_n) >= n*alpha} by lattice DP."""
    if n < 1:
        raise ValueError("n must be positive")
    alpha = float(alpha)
    latt = lattice_structure(model.f)
    if not latt.is_lattice:
        raise DomainError("non-lattice-f", "f values admit no common step")
    if latt.step is None:
        # constant observable: the sum is deterministic
        return 0.0 if model.f[0] >= alpha - 1e-12 * (1.0 + abs(alpha)) else -math.inf
    d, w0 = latt.step, latt.offset
    msteps = np.rint((model.f - w0) / d).astype(np.int64)
    mx = int(msteps.max())
    if n * n * mx > _DP_CELLS:
        raise DomainError("dp-too-large", f"{n * n * mx} DP cells exceed the guard")
    t_real = n * (alpha - w0) / d
    t_int = math.ceil(t_real - 1e-9)
    if t_int <= 0:
        return 0.0
    if t_int > n * mx:
        return -math.inf
    with np.errstate(divide="ignore"):
        loginit = np.log(model.initial)
        logtrans = np.log(model.transition)
    return min(kernels.markov_dp(loginit, logtrans, msteps, n, t_int), 0.0)


def markov_tail_exact(model: MarkovModel, alpha: float, n: int) -> float:
    return math.exp(markov_tail_log(model, alpha, n))
