"""Monte Carlo validators: plain sampling and tilted importance sampling.

N block estimates are partitioned across `workers` logical streams; worker w
draws from the (seed, w) Philox stream, so an estimate is reproducible for a
fixed (seed, workers) pair. Importance weights are handled on the log scale
throughout; relative standard errors transfer to the log scale by the delta
method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtri

from . import rng
from ._logsum import LogSum
from .dist import Dist, Exponential, FiniteDist, Gaussian, fvalues
from .errors import DomainError
from .exact import Halfspace, _mirror
from .rates import CgfSpec, _Core, rate_equality

_MIN_N_SAMPLES = 1000
_UNRELIABLE = 0.30

ObsFn = Callable[[float], float] | None


@dataclass(frozen=True)
class TailEstimate:
    """A log-scale probability estimate with its relative standard error."""

    method: str
    n: int
    n_samples: int
    seed: int
    workers: int
    log_p_hat: float
    std_err_rel: float
    flags: tuple[str, ...]

    def record(self) -> dict:
        """Flat mapping for serialization."""
        return {
            "method": self.method,
            "n": self.n,
            "N": self.n_samples,
            "seed": self.seed,
            "workers": self.workers,
            "log_p_hat": self.log_p_hat,
            "std_err_rel": self.std_err_rel,
            "flags": list(self.flags),
        }


def _check_args(n: int, n_samples: int, workers: int) -> None:
    if n < 1:
        raise ValueError("block length n must be positive")
    if n_samples < _MIN_N_SAMPLES:
        raise ValueError(f"need at least {_MIN_N_SAMPLES} samples")
    if not 1 <= workers <= n_samples:
        raise ValueError("workers must be in [1, N]")


def _partition(n_samples: int, workers: int) -> list[int]:
    base, extra = divmod(n_samples, workers)
    return [base + (1 if w < extra else 0) for w in range(workers)]


def _block_sums(dist: Dist, f: ObsFn, n: int, blocks: int, gen) -> np.ndarray:
    """f summed over each of `blocks` i.i.d. blocks of length n."""
    u = gen.random(blocks * n)
    if isinstance(dist, FiniteDist):
        cdf = np.cumsum(dist.probs)
        cdf[-1] = 1.0
        idx = np.searchsorted(cdf, u, side="right")
        fs = fvalues(dist, f)[idx]
    else:
        if isinstance(dist, Gaussian):
            x = dist.mu + dist.sigma * ndtri(np.clip(u, 1e-300, None))
        else:
            x = -np.log1p(-u) / dist.rate
        if f is None:
            fs = x
        else:
            try:
                fs = np.asarray(f(x), dtype=float)
                if fs.shape != x.shape:
                    raise TypeError
            except TypeError:
                fs = np.array([float(f(v)) for v in x])
    return fs.reshape(blocks, n).sum(axis=1)


def _chunks(total: int, n: int):
    step = max(1, 4_000_000 // max(n, 1))
    done = 0
    while done < total:
        b = min(step, total - done)
        yield b
        done += b


def mc_tail(
    dist: Dist,
    f: ObsFn,
    alpha: float,
    n: int,
    n_samples: int,
    seed: int,
    workers: int = 1,
) -> TailEstimate:
    """Plain Monte Carlo estimate of P{f(X_1) + ... + f(X_n) >= n*alpha}."""
    _check_args(n, n_samples, workers)
    thresh = n * float(alpha)
    hits = 0
    for w, count in enumerate(_partition(n_samples, workers)):
        gen = rng.stream(seed, w)
        for b in _chunks(count, n):
            s = _block_sums(dist, f, n, b, gen)
            hits += int(np.count_nonzero(s - thresh >= 0))
    flags: list[str] = []
    if hits == 0:
        log_p = -math.inf
        se_rel = math.inf
        flags.append("zero-hits")
    else:
        p_hat = hits / n_samples
        log_p = math.log(p_hat)
        se_rel = math.sqrt((1.0 - p_hat) / (p_hat * n_samples))
    if se_rel > _UNRELIABLE:
        flags.append("unreliable")
    return TailEstimate("mc", n, n_samples, seed, workers, log_p, se_rel, tuple(flags))


def _is_core(
    dist: Dist,
    f: ObsFn,
    alpha: float,
    n: int,
    n_samples: int,
    seed: int,
    workers: int,
) -> TailEstimate:
    spec = CgfSpec(base=dist, f=f)
    rp = rate_equality(spec, float(alpha))
    if rp.boundary != "interior" or rp.lambda_star is None or rp.lambda_star <= 0:
        raise DomainError(
            "no-tilt-available",
            "importance sampling needs an interior alpha above the mean",
        )
    lam = rp.lambda_star
    log_mgf = _Core(spec).value(lam)
    proposal = rp.tilted
    thresh = n * float(alpha)
    acc_w = LogSum()
    acc_w2 = LogSum()
    hits = 0
    for w, count in enumerate(_partition(n_samples, workers)):
        gen = rng.stream(seed, w)
        for b in _chunks(count, n):
            s = _block_sums(proposal, f, n, b, gen)
            hit = s - thresh >= 0
            if not hit.any():
                continue
            hits += int(np.count_nonzero(hit))
            logw = n * log_mgf - lam * s[hit]
            acc_w.add_array(logw)
            acc_w2.add_array(2.0 * logw)
    flags: list[str] = []
    if hits == 0:
        log_p = -math.inf
        se_rel = math.inf
        flags.append("zero-hits")
    else:
        log_p = acc_w.value() - math.log(n_samples)
        m2_log = acc_w2.value() - math.log(n_samples)
        se_rel = math.sqrt(max(math.exp(m2_log - 2.0 * log_p) - 1.0, 0.0) / n_samples)
    if se_rel > _UNRELIABLE:
        flags.append("unreliable")
    return TailEstimate("is", n, n_samples, seed, workers, log_p, se_rel, tuple(flags))


def is_tail(
    dist: Dist,
    f: ObsFn,
    alpha: float,
    n: int,
    n_samples: int,
    seed: int,
    workers: int = 1,
) -> TailEstimate:
    """Importance-sampling estimate of P{f(X_1) + ... + f(X_n) >= n*alpha}.

    Blocks are drawn from the tilted measure attaining the rate at alpha;
    the weight of a hit block with observable sum s is exp(n*cgf - lam*s),
    which is at most exp(-n*rate) on the event.
    """
    _check_args(n, n_samples, workers)
    return _is_core(dist, f, alpha, n, n_samples, seed, workers)


def is_empirical_event(
    p: FiniteDist,
    n: int,
    event: Halfspace,
    n_samples: int,
    seed: int,
    workers: int = 1,
) -> TailEstimate:
    """Importance-sampling estimate of a halfspace empirical-measure event.

    The event {empirical mean of f >= alpha} coincides with the block-sum
    tail, so lower halfspaces reduce to the mirrored observable.
    """
    _check_args(n, n_samples, workers)
    if not isinstance(event, Halfspace):
        raise ValueError("importance sampling supports halfspace events only")
    if event.direction == ">=":
        return _is_core(p, event.f, event.alpha, n, n_samples, seed, workers)
    return _is_core(p, _mirror(event.f), -event.alpha, n, n_samples, seed, workers)
