"""NumPy fallback kernels.

Same call signatures and iteration order as the compiled module _kernels, so
results agree to floating-point reassociation error. Type classes are
enumerated in ascending lexicographic order of the count vectors, streamed
through vectorized chunks bounded by _CHUNK rows.
"""

from __future__ import annotations

import math

import numpy as np

from ._logsum import LogSum

BACKEND = "python"

_CHUNK = 2_000_000


def _comps(n: int, k: int) -> np.ndarray:
    """All count vectors of length k summing to n, ascending lex, (rows, k)."""
    if k == 1:
        return np.array([[n]], dtype=np.int64)
    if k == 2:
        c0 = np.arange(n + 1, dtype=np.int64)
        return np.column_stack([c0, n - c0])
    blocks = []
    for c0 in range(n + 1):
        sub = _comps(n - c0, k - 1)
        blocks.append(
            np.column_stack([np.full(len(sub), c0, dtype=np.int64), sub])
        )
    return np.vstack(blocks)


def _blocks(n: int, k: int):
    if k <= 2 or math.comb(n + k - 1, k - 1) <= _CHUNK:
        yield _comps(n, k)
        return
    for c0 in range(n + 1):
        for sub in _blocks(n - c0, k - 1):
            yield np.column_stack([np.full(len(sub), c0, dtype=np.int64), sub])


def _reduce(n, logp, lgtable, member_fn, want_coords):
    logp = np.asarray(logp, dtype=float)
    lgtable = np.asarray(lgtable, dtype=float)
    k = logp.size
    lf_n = lgtable[n]
    ev = LogSum()
    coords = [LogSum() for _ in range(k)] if want_coords else None
    for counts in _blocks(n, k):
        logw = lf_n - lgtable[counts].sum(axis=1) + counts @ logp
        mask = member_fn(counts)
        if not mask.any():
            continue
        lw = logw[mask]
        ev.add_array(lw)
        if want_coords:
            cm = counts[mask]
            for x in range(k):
                cx = cm[:, x]
                pos = cx > 0
                if pos.any():
                    coords[x].add_array(lw[pos] + np.log(cx[pos]))
    out = np.array([c.value() for c in coords]) if want_coords else None
    return ev.value(), out


def halfspace_reduce(n, logp, fv, thresh, side, lgtable, want_coords):
    """LSE of type log-probabilities over {side*(c.fv - thresh) >= 0}.

    Returns (log_event, coord) where coord[x] is the LSE of
    logP(T) + log(T_x) over member types (None unless want_coords).
    """
    fv = np.asarray(fv, dtype=float)

    def member(counts):
        return side * (counts @ fv - thresh) >= 0

    return _reduce(n, logp, lgtable, member, want_coords)


def tvball_reduce(n, logp, qn, limit, lgtable, want_coords):
    """Same reduction over {sum_i |c_i - qn_i| <= limit}."""
    qn = np.asarray(qn, dtype=float)

    def member(counts):
        return np.abs(counts - qn).sum(axis=1) <= limit

    return _reduce(n, logp, lgtable, member, want_coords)


def markov_dp(loginit, logtrans, msteps, n, pos_thresh):
    """log P{sum of integer steps >= pos_thresh} for an n-step chain.

    msteps[j] >= 0 is the lattice index of state j's additive contribution;
    forward DP over (state, running index sum) in log space.
    """
    loginit = np.asarray(loginit, dtype=float)
    logtrans = np.asarray(logtrans, dtype=float)
    msteps = np.asarray(msteps, dtype=np.int64)
    k = loginit.size
    w = n * int(msteps.max()) + 1
    prev = np.full((k, w), -np.inf)
    for j in range(k):
        prev[j, msteps[j]] = loginit[j]
    for _ in range(1, n):
        cur = np.full((k, w), -np.inf)
        acc = np.empty(w)
        for j in range(k):
            acc.fill(-np.inf)
            for i in range(k):
                np.logaddexp(acc, prev[i] + logtrans[i, j], out=acc)
            sh = int(msteps[j])
            if sh:
                cur[j, sh:] = acc[: w - sh]
            else:
                cur[j, :] = acc
        prev = cur
    lo = max(int(pos_thresh), 0)
    if lo >= w:
        return -math.inf
    z = prev[:, lo:]
    m = float(z.max())
    if m == -math.inf:
        return -math.inf
    return m + math.log(float(np.exp(z - m).sum()))
