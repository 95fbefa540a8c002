"""Sharp (prefactor-level) tail approximations.

For an upper tail with an interior positive tilt, the probability of
{sum of n observations >= n*alpha} is approximated by

    c / sqrt(2*pi*n*V) * exp(-n*D)

where D is the rate, V the relative varentropy of the tilted measure, and c
corrects for a lattice-supported log-likelihood ratio: c = d/(1 - exp(-d))
for lattice step d, else c = 1. The same construction serves halfspace
empirical-measure events, so the two entry points agree exactly when the
observable is the identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .dist import (
    Dist,
    FiniteDist,
    LatticeInfo,
    lattice_structure,
    relative_varentropy,
    var_f,
)
from .errors import DomainError
from .exact import Halfspace, _mirror, event_log_prob
from .rates import CgfSpec, rate_equality

ObsFn = Callable[[float], float] | None


@dataclass(frozen=True)
class SharpApprox:
    """Factors of the sharp tail approximation, evaluated at sample size n."""

    D: float
    V: float
    lattice: LatticeInfo
    c: float
    n: int
    log_value: float

    def log_approx(self, n: int) -> float:
        """log of c / sqrt(2 pi n V) * exp(-n D)."""
        return -n * self.D + math.log(self.c) - 0.5 * math.log(2 * math.pi * n * self.V)


def _build(spec: CgfSpec, alpha: float, n: int) -> SharpApprox:
    rp = rate_equality(spec, alpha)
    if rp.boundary != "interior" or rp.lambda_star is None or rp.lambda_star <= 0:
        raise DomainError(
            "no-sharp-asymptotics",
            "need an interior alpha above the mean (positive attaining tilt)",
        )
    lam = rp.lambda_star
    if isinstance(spec.base, FiniteDist):
        q = rp.tilted
        v = relative_varentropy(q, spec.base)
        mask = (q.probs > 0) & (spec.base.probs > 0)
        iota = np.log(q.probs[mask] / spec.base.probs[mask])
        latt = lattice_structure(iota)
    else:
        # continuous base: log-likelihood ratio has a density, never lattice
        v = lam * lam * var_f(rp.tilted)
        latt = LatticeInfo(False, None, 0.0)
    if not v > 0:
        raise DomainError("no-sharp-asymptotics", "degenerate tilted measure")
    if latt.is_lattice and latt.step is not None:
        d = latt.step
        c = d / -math.expm1(-d)
    else:
        c = 1.0
    out = SharpApprox(rp.gamma, v, latt, c, n, 0.0)
    return SharpApprox(rp.gamma, v, latt, c, n, out.log_approx(n))


def strong_cramer(spec: CgfSpec, alpha: float, n: int) -> SharpApprox:
    """Sharp approximation of P{X_1 + ... + X_n >= n*alpha} under spec."""
    if n < 1:
        raise ValueError("n must be positive")
    return _build(spec, float(alpha), int(n))


def strong_sanov(p: FiniteDist, event: Halfspace, n: int) -> SharpApprox:
    """Sharp approximation of a halfspace empirical-measure event.

    Identical to strong_cramer for the upper-tail identity observable; lower
    halfspaces are handled by mirroring the observable.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if event.direction == ">=":
        spec = CgfSpec(base=p, f=event.f)
        return _build(spec, float(event.alpha), int(n))
    spec = CgfSpec(base=p, f=_mirror(event.f))
    return _build(spec, -float(event.alpha), int(n))


def approx_vs_exact(
    p: FiniteDist,
    alpha: float,
    n_grid: Sequence[int],
    f: ObsFn = None,
) -> list[dict]:
    """Rows comparing the sharp approximation with the exact tail on a grid.

    Each row holds n, exact and approximate log-probabilities, and the ratio
    exact/approx on the linear scale.
    """
    rows = []
    for n in n_grid:
        sharp = strong_cramer(CgfSpec(base=p, f=f), alpha, int(n))
        exact = event_log_prob(p, int(n), Halfspace(f, alpha, ">="))
        rows.append(
            {
                "n": int(n),
                "exact_log": exact,
                "approx_log": sharp.log_value,
                "ratio": math.exp(exact - sharp.log_value),
            }
        )
    return rows
