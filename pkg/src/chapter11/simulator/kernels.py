"""numba path kernels.

Each path writes four outputs: the accumulated payoff (discounted dividends,
or ``exp(-q zeta)`` in exit mode), the stopping time, a status code and the
number of insolvency spells entered. Paths are independent, so ``prange``
scheduling never changes any bit of the result.
"""
import math

import numpy as np
from numba import njit, prange

from .rng import next_exponential, next_hyperexp, next_normal

BANKRUPT = 0
TRUNCATED = 1
REACHED = 2
RUINED = 3

MODE_VALUE = 0
MODE_EXIT = 1


@njit(cache=True)
def _exact_path(state, x0, i0, p, lam0, cw, rt, pt, lamt, cwt, rtt,
                c, q, lam, d, z, mode, switching, t_trunc):
    t = 0.0
    pv = 0.0
    spells = 0
    u = x0
    solvent = i0 == 0
    e = 0.0
    if not solvent:
        e = next_exponential(state, lam)
        spells = 1
    elif mode == MODE_VALUE and u > d:
        pv = u - d
        u = d
    while True:
        if solvent:
            if mode == MODE_EXIT and u >= z:
                return math.exp(-q * t), t, REACHED, spells
            tau = next_exponential(state, lam0)
            if mode == MODE_VALUE:
                s = (d - u) / p
                if t + tau >= t_trunc:
                    if t + s < t_trunc:
                        pv += p * (math.exp(-q * (t + s)) - math.exp(-q * t_trunc)) / q
                    return pv, t_trunc, TRUNCATED, spells
                if s < tau:
                    pv += p * (math.exp(-q * (t + s)) - math.exp(-q * (t + tau))) / q
                    u = d
                else:
                    u += p * tau
            else:
                s = (z - u) / p
                if s < tau:
                    if t + s >= t_trunc:
                        return 0.0, t_trunc, TRUNCATED, spells
                    return math.exp(-q * (t + s)), t + s, REACHED, spells
                if t + tau >= t_trunc:
                    return 0.0, t_trunc, TRUNCATED, spells
                u += p * tau
            t += tau
            u -= next_hyperexp(state, cw, rt)
            if u < 0.0:
                if not switching:
                    return pv, t, RUINED, spells
                solvent = False
                spells += 1
                e = next_exponential(state, lam)
        else:
            h = (c - u) / pt if pt > 0.0 else np.inf
            tau = next_exponential(state, lamt)
            ev = min(e, h, tau)
            if t + ev >= t_trunc:
                return pv, t_trunc, TRUNCATED, spells
            if e <= h and e <= tau:
                return pv, t + e, BANKRUPT, spells
            if h <= tau:
                t += h
                u = c
                solvent = True
            else:
                t += tau
                e -= tau
                u += pt * tau - next_hyperexp(state, cwt, rtt)


@njit(cache=True)
def _jump_total(state, t0, t1, tj, lam0, cw, rt):
    """Sum of jumps in ``(t0, t1]`` given the next jump epoch ``tj``; returns (sum, new tj)."""
    total = 0.0
    while tj <= t1:
        total += next_hyperexp(state, cw, rt)
        tj += next_exponential(state, lam0)
    return total, tj


@njit(cache=True)
def _euler_path(state, x0, i0, p, sig, lam0, cw, rt, pt, sigt, lamt, cwt, rtt,
                c, q, lam, d, z, mode, switching, t_trunc, dt):
    t = 0.0
    pv = 0.0
    spells = 0
    u = x0
    solvent = i0 == 0
    e = 0.0
    sq = math.sqrt(dt)
    if not solvent:
        e = next_exponential(state, lam)
        spells = 1
        tj = next_exponential(state, lamt)
    else:
        tj = next_exponential(state, lam0)
        if mode == MODE_VALUE and u > d:
            pv = u - d
            u = d
        if mode == MODE_EXIT and u >= z:
            return 1.0, 0.0, REACHED, spells
    while True:
        t1 = t + dt
        if t1 > t_trunc:
            return pv, t_trunc, TRUNCATED, spells
        if solvent:
            u += p * dt
            if sig > 0.0:
                u += sig * sq * next_normal(state)
            jumps, tj = _jump_total(state, t, t1, tj, lam0, cw, rt)
            u -= jumps
            t = t1
            if mode == MODE_VALUE and u > d:
                pv += math.exp(-q * t) * (u - d)
                u = d
            if mode == MODE_EXIT and u >= z:
                return math.exp(-q * t), t, REACHED, spells
            if u < 0.0:
                if not switching:
                    return pv, t, RUINED, spells
                solvent = False
                spells += 1
                e = next_exponential(state, lam)
                tj = t + next_exponential(state, lamt)
        else:
            if e <= dt:
                return pv, t + e, BANKRUPT, spells
            e -= dt
            u += pt * dt
            if sigt > 0.0:
                u += sigt * sq * next_normal(state)
            jumps, tj = _jump_total(state, t, t1, tj, lamt, cwt, rtt)
            u -= jumps
            t = t1
            if u >= c:
                u = c
                solvent = True
                tj = t + next_exponential(state, lam0)
                if mode == MODE_EXIT and u >= z:
                    return math.exp(-q * t), t, REACHED, spells


@njit(cache=True)
def _start(base, i, stride):
    s = np.empty(1, dtype=np.uint64)
    s[0] = base + np.uint64(i) * stride
    return s


@njit(parallel=True, cache=True)
def run_exact(base, stride, n, x0, i0, p, lam0, cw, rt, pt, lamt, cwt, rtt,
              c, q, lam, d, z, mode, switching, t_trunc):
    pv = np.empty(n)
    tend = np.empty(n)
    status = np.empty(n, dtype=np.int8)
    spells = np.empty(n, dtype=np.int32)
    for i in prange(n):
        st = _start(base, i, stride)
        a, b, s, k = _exact_path(st, x0, i0, p, lam0, cw, rt, pt, lamt, cwt, rtt,
                                 c, q, lam, d, z, mode, switching, t_trunc)
        pv[i] = a
        tend[i] = b
        status[i] = s
        spells[i] = k
    return pv, tend, status, spells


@njit(parallel=True, cache=True)
def run_euler(base, stride, n, x0, i0, p, sig, lam0, cw, rt, pt, sigt, lamt, cwt, rtt,
              c, q, lam, d, z, mode, switching, t_trunc, dt):
    pv = np.empty(n)
    tend = np.empty(n)
    status = np.empty(n, dtype=np.int8)
    spells = np.empty(n, dtype=np.int32)
    for i in prange(n):
        st = _start(base, i, stride)
        a, b, s, k = _euler_path(st, x0, i0, p, sig, lam0, cw, rt, pt, sigt, lamt, cwt, rtt,
                                 c, q, lam, d, z, mode, switching, t_trunc, dt)
        pv[i] = a
        tend[i] = b
        status[i] = s
        spells[i] = k
    return pv, tend, status, spells
