"""Information projections onto moment constraint sets.

The projection of P onto {Q : Q(f_j) = alpha_j} is the exponential tilt of P
by a multiplier combination of the f_j when alpha lies in the relative
interior of the attainable moment polytope. On a face of the polytope the
projection is supported on that face and no finite multiplier exists; it is
computed by conditioning P on the face and recursing.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _hull
from .dist import FiniteDist, fvalues, kl_divergence, mean_f
from .errors import DomainError
from .rates import CgfSpec, _affine_reduce, _newton_dual, rate_equality

_RANK_TOL = 1e-10  # constraint redundancy detection
_FEAS_TOL = 1e-9  # feasibility classification

ObsFn = Callable[[float], float] | None


@dataclass(frozen=True)
class IProjection:
    """Result of projecting P onto a moment constraint set.

    ``multipliers`` is None when the projection sits on a face of the moment
    polytope (no finite tilt attains it). ``active`` marks binding
    constraints; for equality constraints it is all True.
    """

    q_star: FiniteDist
    divergence: float
    multipliers: np.ndarray | None
    residuals: np.ndarray
    active: np.ndarray


def _drop_redundant(F: np.ndarray, alphas: np.ndarray):
    """Indices of an affinely independent constraint subset.

    A dropped constraint must be implied by the kept ones at the given

    alphas; otherwise the system is infeasible.
    """
    m_con = F.shape[1]
    G = F - F[0, :]  # kills constant offsets
    kept: list[int] = []
    for j in range(m_con):
        gj = G[:, j]
        scale = max(1.0, float(np.abs(F[:, j]).max()))
        if not kept:
            dependent = bool(np.abs(gj).max() <= _RANK_TOL * scale)
            implied = F[0, j]
        else:
            A = G[:, kept]
            coef = np.linalg.lstsq(A, gj, rcond=None)[0]
            dependent = bool(np.abs(gj - A @ coef).max() <= _RANK_TOL * scale)
            implied = float(coef @ alphas[kept] + (F[0, j] - coef @ F[0, kept]))
        if dependent:
            if abs(alphas[j] - implied) > _FEAS_TOL * (1.0 + abs(alphas[j])):
                raise DomainError(
                    "infeasible-constraints",
                    f"constraint {j} is affinely dependent but targets an inconsistent value",
                )
            warnings.warn(f"dropping redundant constraint {j}", stacklevel=3)
        else:
            kept.append(j)
    return kept


def _finish(p: FiniteDist, q: FiniteDist, fs, alphas, multipliers, active) -> IProjection:
    resid = np.array([mean_f(q, f) - a for f, a in zip(fs, alphas)])
    return IProjection(q, kl_divergence(q, p), multipliers, resid, np.asarray(active, bool))


def _scalar_projection(p: FiniteDist, f: ObsFn, alpha: float):
    """(q_star, multiplier or None) for a single equality constraint."""
    rp = rate_equality(CgfSpec(base=p, f=f), float(alpha))
    if rp.boundary == "interior":
        return rp.tilted, rp.lambda_star
    if rp.boundary == "at_alpha_max" and rp.tilted is not None:
        return rp.tilted, None
    fv = fvalues(p, f)
    if np.any(p.probs == 0):
        # alpha may still touch a retained zero-probability extreme
        tol = _FEAS_TOL * (1.0 + float(np.abs(fv).max()))
        if min(abs(alpha - fv.min()), abs(alpha - fv.max())) <= tol:
            raise DomainError(
                "boundary-constraints", "constraint feasible only on a zero-probability face"
            )
    raise DomainError("infeasible-constraints", f"no measure on supp(P) has mean {alpha}")


def iproject_equality(
    p: FiniteDist,
    fs: Sequence[ObsFn],
    alphas: Sequence[float],
    start: Sequence[float] | None = None,
) -> IProjection:
    """Projection of p onto {Q : Q(f_j) = alphas_j for all j}.

    ``start`` optionally seeds the multiplier search (same result either way;
    exposed to let callers verify uniqueness).
    """
    fs = list(fs)
    alphas = np.asarray(alphas, dtype=float).ravel()
    if not 1 <= len(fs) <= 4 or len(fs) != alphas.size:
        raise ValueError("need 1..4 observables with matching alphas")
    F = np.column_stack([fvalues(p, f) for f in fs])
    kept = _drop_redundant(F, alphas)
    if not kept:
        # every constraint is constant on supp(p) and consistent
        return _finish(p, p, fs, alphas, np.zeros(len(fs)), np.ones(len(fs), bool))
    if len(kept) == 1:
        j = kept[0]
        q, lam = _scalar_projection(p, fs[j], float(alphas[j]))
        mult = None
        if lam is not None:
            mult = np.zeros(len(fs))
            mult[j] = lam
        return _finish(p, q, fs, alphas, mult, np.ones(len(fs), bool))

    moments = F[:, kept]
    target = alphas[kept]
    scale = 1.0 + float(np.abs(moments).max())
    pos = p.probs > 0
    idx_pos = np.flatnonzero(pos)

    def _recurse(face_idx: np.ndarray) -> IProjection:
        mass = float(p.probs[face_idx].sum())
        if mass <= 0.0:
            raise DomainError(
                "boundary-constraints", "constraints feasible only on a zero-probability face"
            )
        p_face = FiniteDist(p.values[face_idx], p.probs[face_idx] / mass)
        inner = iproject_equality(p_face, fs, alphas)
        return _finish(p, inner.q_star, fs, alphas, None, np.ones(len(fs), bool))

    # classify against the hull of the positive-mass support
    center, basis, coords = _affine_reduce(moments[pos], p.probs[pos])
    t_red = (target - center) @ basis
    on_span = float(np.abs(target - (center + basis @ t_red)).max()) <= _FEAS_TOL * scale
    status = "outside"
    if on_span:
        status, face = _hull.classify(coords, t_red, _FEAS_TOL * scale)
    if status == "boundary":
        return _recurse(idx_pos[face])
    if status == "outside":
        if np.any(~pos):
            # retained zero atoms widen the declared hull; a target on one of
            # its faces is a zero-probability event, not a malformed request
            c_a, b_a, coords_a = _affine_reduce(moments, None)
            t_a = (target - c_a) @ b_a
            if float(np.abs(target - (c_a + b_a @ t_a)).max()) <= _FEAS_TOL * scale:
                status_a, face_a = _hull.classify(coords_a, t_a, _FEAS_TOL * scale)
                if status_a == "boundary":
                    return _recurse(np.flatnonzero(face_a & pos))
        raise DomainError("infeasible-constraints", "target outside the attainable moment set")
    lam0 = None
    if start is not None:
        start = np.asarray(start, dtype=float).ravel()
        if start.size != len(fs):
            raise ValueError("start length mismatch")
        lam0 = basis.T @ start[kept]
    logp = np.log(p.probs[pos])
    lam_r, _, w = _newton_dual(coords, logp, t_red, start=lam0)
    probs = np.zeros(p.k)
    probs[idx_pos] = w / w.sum()
    q = FiniteDist(p.values, probs, keep_zeros=bool(np.any(probs == 0)))
    mult = np.zeros(len(fs))
    mult[kept] = basis @ lam_r
    return _finish(p, q, fs, alphas, mult, np.ones(len(fs), bool))


def iproject_inequality(p: FiniteDist, f: ObsFn, alpha: float) -> IProjection:
    """Projection of p onto {Q : Q(f) >= alpha}.

    Inactive when p already satisfies the constraint (Q* = p, multiplier 0);
    otherwise the equality projection at alpha with a positive multiplier.
    """
    alpha = float(alpha)
    m = mean_f(p, f)
    if m >= alpha:
        return _finish(p, p, [f], [alpha], np.zeros(1), np.zeros(1, bool))
    q, lam = _scalar_projection(p, f, alpha)
    mult = None if lam is None else np.array([lam])
    return _finish(p, q, [f], [alpha], mult, np.ones(1, bool))


def pythagorean_gap(r: FiniteDist, p: FiniteDist, proj: IProjection) -> float:
    """D(r||p) - D(r||q_star) - D(q_star||p).

    Nonnegative for r in the constraint set; zero there for equality
    constraints. r must be absolutely continuous w.r.t. p.
    """
    d_rp = kl_divergence(r, p)
    d_rq = kl_divergence(r, proj.q_star)
    if math.isinf(d_rp) and math.isinf(d_rq):
        raise DomainError("not-absolutely-continuous", "r outside both supports")
    return d_rp - d_rq - proj.divergence
