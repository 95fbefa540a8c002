# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: streaming type-class reductions and the lattice-sum DP.

Mirrors _kernels_py (same signatures, same ascending-lex enumeration order);
results agree up to floating-point reassociation.
"""

from libc.math cimport exp, log, fabs, INFINITY

import numpy as np


cdef struct LogAcc:
    double m
    double s


cdef inline void acc_add(LogAcc* a, double z) nogil:
    if z == -INFINITY:
        return
    if z > a.m:
        a.s = a.s * exp(a.m - z) + 1.0
        a.m = z
    else:
        a.s += exp(z - a.m)


cdef inline double acc_value(LogAcc* a) nogil:
    if a.s <= 0.0:
        return -INFINITY
    return a.m + log(a.s)


cdef _reduce(int n, const double[::1] logp, const double[::1] lgtable, int mode,
             const double[::1] avec, double bval, int side, bint want_coords):
    # mode 0: halfspace  side*(c.avec - bval) >= 0
    # mode 1: tv ball    sum |c_i - avec_i| <= bval
    cdef Py_ssize_t k = logp.shape[0]
    cdef Py_ssize_t[::1] c = np.zeros(k, dtype=np.intp)
    cdef double[::1] acc_m = np.full(k, -INFINITY)
    cdef double[::1] acc_s = np.zeros(k)
    cdef LogAcc ev
    cdef LogAcc cx
    cdef double lf_n = lgtable[n]
    cdef double logw, s, z
    cdef Py_ssize_t i, j, t
    cdef bint member, done
    ev.m = -INFINITY
    ev.s = 0.0

    c[k - 1] = n
    done = False
    while not done:
        s = 0.0
        logw = lf_n
        for i in range(k):
            logw += c[i] * logp[i] - lgtable[c[i]]
            if mode == 0:
                s += c[i] * avec[i]
            else:
                s += fabs(c[i] - avec[i])
        if mode == 0:
            member = side * (s - bval) >= 0.0
        else:
            member = s <= bval
        if member:
            acc_add(&ev, logw)
            if want_coords:
                for i in range(k):
                    if c[i] > 0:
                        z = logw + log(<double> c[i])
                        cx.m = acc_m[i]
                        cx.s = acc_s[i]
                        acc_add(&cx, z)
                        acc_m[i] = cx.m
                        acc_s[i] = cx.s
        # next count vector in ascending lexicographic order
        if k == 1:
            done = True
        elif c[k - 1] > 0:
            c[k - 2] += 1
            c[k - 1] -= 1
        else:
            j = k - 2
            while j >= 0 and c[j] == 0:
                j -= 1
            if j <= 0:
                done = True
            else:
                t = c[j]
                c[j] = 0
                c[j - 1] += 1
                c[k - 1] = t - 1

    coords = None
    if want_coords:
        out = np.empty(k)
        for i in range(k):
            cx.m = acc_m[i]
            cx.s = acc_s[i]
            out[i] = acc_value(&cx)
        coords = out
    return acc_value(&ev), coords


def halfspace_reduce(n, logp, fv, thresh, side, lgtable, want_coords):
    """LSE of type log-probabilities over {side*(c.fv - thresh) >= 0}."""
    return _reduce(
        int(n),
        np.ascontiguousarray(logp, dtype=np.float64),
        np.ascontiguousarray(lgtable, dtype=np.float64),
        0,
        np.ascontiguousarray(fv, dtype=np.float64),
        float(thresh),
        int(side),
        bool(want_coords),
    )


def tvball_reduce(n, logp, qn, limit, lgtable, want_coords):
    """Same reduction over {sum_i |c_i - qn_i| <= limit}."""
    return _reduce(
        int(n),
        np.ascontiguousarray(logp, dtype=np.float64),
        np.ascontiguousarray(lgtable, dtype=np.float64),
        1,
        np.ascontiguousarray(qn, dtype=np.float64),
        float(limit),
        1,
        bool(want_coords),
    )


def markov_dp(loginit, logtrans, msteps, n, pos_thresh):
    """log P{sum of integer steps >= pos_thresh} for an n-step chain."""
    cdef const double[::1] ini = np.ascontiguousarray(loginit, dtype=np.float64)
    cdef const double[:, ::1] lt = np.ascontiguousarray(logtrans, dtype=np.float64)
    cdef const Py_ssize_t[::1] ms = np.ascontiguousarray(msteps, dtype=np.intp)
    cdef Py_ssize_t k = ini.shape[0]
    cdef Py_ssize_t nn = int(n)
    cdef Py_ssize_t mx = 0
    cdef Py_ssize_t i, j, t, p, sh, lo
    for j in range(k):
        if ms[j] > mx:
            mx = ms[j]
    cdef Py_ssize_t w = nn * mx + 1
    cdef double[:, ::1] prev = np.full((k, w), -INFINITY)
    cdef double[:, ::1] cur = np.full((k, w), -INFINITY)
    cdef double[:, ::1] tmp
    cdef double best, tot, v
    cdef LogAcc tail
    for j in range(k):
        prev[j, ms[j]] = ini[j]
    for t in range(1, nn):
        with nogil:
            for j in range(k):
                sh = ms[j]
                for p in range(w):
                    cur[j, p] = -INFINITY
                for p in range(w - sh):
                    # cur[j, p+sh] = LSE_i prev[i, p] + lt[i, j]
                    best = -INFINITY
                    for i in range(k):
                        v = prev[i, p] + lt[i, j]
                        if v > best:
                            best = v
                    if best == -INFINITY:
                        continue
                    tot = 0.0
                    for i in range(k):
                        v = prev[i, p] + lt[i, j]
                        if v != -INFINITY:
                            tot += exp(v - best)
                    cur[j, p + sh] = best + log(tot)
        tmp = prev
        prev = cur
        cur = tmp
    lo = int(pos_thresh)
    if lo < 0:
        lo = 0
    if lo >= w:
        return -INFINITY
    tail.m = -INFINITY
    tail.s = 0.0
    for j in range(k):
        for p in range(lo, w):
            acc_add(&tail, prev[j, p])
    return acc_value(&tail)
