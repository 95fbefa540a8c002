"""Position of a point relative to the convex hull of a finite point set.

Points are assumed already reduced to coordinates that affinely span their
space (see rates._affine_reduce); qhull then never sees a degenerate input.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import DomainError


def classify(points: np.ndarray, x: np.ndarray, tol: float):
    """Classify x against hull(points): ("interior"|"boundary"|"outside", face).

    ``face`` is a boolean mask of the points lying on every hull facet active
    at x (meaningful for the boundary case; all-True otherwise).
    """
    m, r = points.shape
    all_pts = np.ones(m, dtype=bool)
    if r == 0:
        return "interior", all_pts
    if r == 1:
        v = points[:, 0]
        lo, hi = float(v.min()), float(v.max())
        a = float(x[0])
        if a < lo - tol or a > hi + tol:
            return "outside", all_pts
        if a <= lo + tol:
            return "boundary", v <= lo + tol
        if a >= hi - tol:
            return "boundary", v >= hi - tol
        return "interior", all_pts
    try:
        hull = ConvexHull(points)
    except QhullError as exc:
        raise DomainError("degenerate-support", f"hull construction failed: {exc}")
    eqs = hull.equations  # A x + b <= 0 inside
    resid = eqs[:, :-1] @ x + eqs[:, -1]
    if np.any(resid > tol):
        return "outside", all_pts
    active = np.abs(resid) <= tol
    if not np.any(active):
        return "interior", all_pts
    on_face = np.ones(m, dtype=bool)
    for j in np.flatnonzero(active):
        on_face &= np.abs(points @ eqs[j, :-1] + eqs[j, -1]) <= tol
    return "boundary", on_face
