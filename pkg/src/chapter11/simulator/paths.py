"""Pure-Python event tracer for single exact_bv paths.

It consumes the same random stream as the compiled kernel, so a traced path
reproduces the kernel's payoff for the same (seed, path index) exactly, and
it additionally records every regime change for inspection or CSV export.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..value_engine import Chapter11Model
from .rng import PyStream


@dataclass
class PathTrace:
    events: list = field(default_factory=list)  # (time, level, regime, kind)
    payoff: float = 0.0
    t_end: float = 0.0
    status: str = ""

    @property
    def regimes(self) -> list:
        """Regime sequence with consecutive duplicates removed."""
        out = []
        for _, _, r, _ in self.events:
            if not out or out[-1] != r:
                out.append(r)
        return out


def _jumps(m):
    if m.jumps is None:
        return 0.0, [1.0], [1.0]
    cw = list(np.cumsum(m.jumps.weights))
    cw[-1] = 1.0
    return m.jumps.intensity, cw, list(m.jumps.rates)


def sample_path(model: Chapter11Model, d: float, x0: float, i0: int, seed: int,
                path: int = 0, eps_trunc: float = 1e-9, record_jumps: bool = True) -> PathTrace:
    """Trace one barrier-strategy path of the regime-switching surplus."""
    rng = PyStream(seed, path)
    p, pt = model.solvent.drift_p, model.insolvent.drift_p
    q, c, lam = model.q, model.c, model.lam
    lam0, cw, rt = _jumps(model.solvent)
    lamt, cwt, rtt = _jumps(model.insolvent)
    horizon = -math.log(eps_trunc) / q
    tr = PathTrace()
    t, u, pv = 0.0, float(x0), 0.0
    solvent = i0 == 0
    e = 0.0
    if solvent:
        if u > d:
            pv, u = u - d, d
        tr.events.append((0.0, u, 0, "start"))
    else:
        e = rng.exponential(lam)
        tr.events.append((0.0, u, 1, "start"))
    while True:
        if solvent:
            tau = rng.exponential(lam0)
            s = (d - u) / p
            if t + tau >= horizon:
                if t + s < horizon:
                    pv += p * (math.exp(-q * (t + s)) - math.exp(-q * horizon)) / q
                tr.payoff, tr.t_end, tr.status = pv, horizon, "truncated"
                return tr
            if s < tau:
                pv += p * (math.exp(-q * (t + s)) - math.exp(-q * (t + tau))) / q
                u = d
            else:
                u += p * tau
            t += tau
            u -= rng.hyperexp(cw, rt)
            if u < 0.0:
                solvent = False
                e = rng.exponential(lam)
                tr.events.append((t, u, 1, "insolvency"))
            elif record_jumps:
                tr.events.append((t, u, 0, "jump"))
        else:
            h = (c - u) / pt if pt > 0 else math.inf
            tau = rng.exponential(lamt)
            ev = min(e, h, tau)
            if t + ev >= horizon:
                tr.payoff, tr.t_end, tr.status = pv, horizon, "truncated"
                return tr
            if e <= h and e <= tau:
                tr.events.append((t + e, u + pt * e, 1, "bankruptcy"))
                tr.payoff, tr.t_end, tr.status = pv, t + e, "bankrupt"
                return tr
            if h <= tau:
                t += h
                u = c
                solvent = True
                tr.events.append((t, u, 0, "recovery"))
            else:
                t += tau
                e -= tau
                u += pt * tau - rng.hyperexp(cwt, rtt)
                if record_jumps:
                    tr.events.append((t, u, 1, "jump"))
