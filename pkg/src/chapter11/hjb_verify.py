"""Numerical certification of the HJB inequalities for a barrier solution.

The generator of a process with Laplace exponent ``psi`` acts on smooth
enough ``f`` as

    A f(x) = gamma f'(x) + sigma^2/2 f''(x)
             + int_0^inf [f(x - z) - f(x) + f'(x) z 1{z <= 1}] nu(dz),

with ``nu`` the (finite, hyperexponential) Levy measure. Both candidate
value functions are a single exponential ``K exp(theta u)`` below some level
``u0``; that part of the jump integral is done in closed form and only the
bounded middle stretch goes to adaptive quadrature.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .errors import KnotProximityError
from .levy_model import LevyModel
from .value_engine import BarrierSolution, value_insolvent, value_solvent, value_solvent_prime, value_solvent_second

KNOT_DELTA = 1e-7


@dataclass(frozen=True)
class ExpBranch:
    """``f(u) = scale * exp(theta * u)`` for ``u < level``."""

    level: float
    scale: float
    theta: float


@dataclass(frozen=True)
class Candidate:
    f: Callable
    f_prime: Callable
    f_second: Callable
    knots: tuple = ()
    below: Optional[ExpBranch] = None


@dataclass(frozen=True)
class GeneratorContext:
    model: LevyModel
    atol: float = 1e-13
    rtol: float = 1e-11
    eps_tail: float = 1e-16
    knots: tuple = ()
    limit: int = 200

    @property
    def gamma(self) -> float:
        return self.model.gamma

    def truncation(self) -> float:
        """Jump size beyond which the Levy measure has mass <= eps_tail * lam0."""
        return math.log(1.0 / self.eps_tail) / self.model.min_rate


def _density(jumps, z):
    return jumps.intensity * float(np.sum(jumps.weights * jumps.rates * np.exp(-jumps.rates * z)))


def _tail_terms(jumps, a, fx, f1x, br: ExpBranch, x):
    """Closed-form contribution of jumps larger than ``a`` (``x - a <= br.level``)."""
    lam0, w, mu = jumps.intensity, jumps.weights, jumps.rates
    th = br.theta
    expo = br.scale * math.exp(th * x) * lam0 * float(np.sum(w * mu * np.exp(-(mu + th) * a) / (mu + th)))
    tail_mass = lam0 * float(np.sum(w * np.exp(-mu * a)))
    comp = 0.0
    if a < 1.0:
        comp = lam0 * float(np.sum(w * ((a + 1.0 / mu) * np.exp(-mu * a) - (1.0 + 1.0 / mu) * np.exp(-mu))))
    return expo - fx * tail_mass + f1x * comp


def _check_knots(x, knots):
    for k in knots:
        if abs(x - k) < KNOT_DELTA:
            raise KnotProximityError(f"x={x!r} is within {KNOT_DELTA} of the kink at {k!r}; shift the point")


def generator_apply(ctx: GeneratorContext, f, f_prime, f_second, x: float,
                    below: Optional[ExpBranch] = None) -> float:
    """``(A f)(x)`` for the process in ``ctx``.

    ``below`` declares an exact exponential branch of ``f``; without it the
    jump integral is truncated where the Levy tail drops under ``eps_tail``.
    """
    x = float(x)
    knots = tuple(ctx.knots)
    _check_knots(x, knots)
    m = ctx.model
    fx, f1x = float(f(x)), float(f_prime(x))
    out = ctx.gamma * f1x
    if m.sigma > 0:
        out += 0.5 * m.sigma**2 * float(f_second(x))
    jumps = m.jumps
    if jumps is None:
        return out
    if below is not None:
        upper = max(x - below.level, 0.0)
    else:
        upper = ctx.truncation()

    def integrand(zz):
        jump = float(f(x - zz)) - fx + (f1x * zz if zz <= 1.0 else 0.0)
        return jump * _density(jumps, zz)

    if upper > 0:
        cuts = {1.0} | {x - k for k in knots if 0 < x - k}
        pts = sorted([0.0] + [s for s in cuts if 0 < s < upper] + [upper])
        for lo, hi in zip(pts, pts[1:]):
            val, _ = quad(integrand, lo, hi, epsabs=ctx.atol, epsrel=ctx.rtol, limit=ctx.limit)
            out += val
    if below is not None:
        out += _tail_terms(jumps, upper, fx, f1x, below, x)
    return out


def apply_candidate(ctx: GeneratorContext, cand: Candidate, x: float) -> float:
    c2 = GeneratorContext(ctx.model, ctx.atol, ctx.rtol, ctx.eps_tail, tuple(cand.knots), ctx.limit)
    return generator_apply(c2, cand.f, cand.f_prime, cand.f_second, x, cand.below)


# ---------------------------------------------------------------------------
# candidates


def solvent_candidate(sol: BarrierSolution, y: float | None = None) -> Candidate:
    y = sol.d_star if y is None else float(y)
    e = sol.ell
    lp = float(e.prime(y))
    br = ExpBranch(0.0, e.w_c * math.exp(-e.phi_tilde * sol.model.c) / lp, e.phi_tilde)
    return Candidate(
        lambda u: value_solvent(sol, u, y),
        lambda u: value_solvent_prime(sol, u, y),
        lambda u: value_solvent_second(sol, u, y),
        knots=tuple(sorted({0.0, sol.model.c, y})),
        below=br,
    )


def insolvent_candidate(sol: BarrierSolution, y: float | None = None) -> Candidate:
    """``V~`` on ``(-inf, c)``; a single exponential, so jumps are all closed-form."""
    y = sol.d_star if y is None else float(y)
    e = sol.ell
    lp = float(e.prime(y))
    k, th, c = e.w_c * math.exp(-e.phi_tilde * sol.model.c) / lp, e.phi_tilde, sol.model.c
    return Candidate(
        lambda u: value_insolvent(sol, u, y),
        lambda u: th * value_insolvent(sol, u, y),
        lambda u: th * th * value_insolvent(sol, u, y),
        knots=(c,),
        below=ExpBranch(c, k, th),
    )


def exponential_candidate(theta: float) -> Candidate:
    return Candidate(
        lambda u: math.exp(theta * u),
        lambda u: theta * math.exp(theta * u),
        lambda u: theta * theta * math.exp(theta * u),
    )


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool
    n_points: int

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"


@dataclass(frozen=True)
class VerificationReport:
    d_star: float
    barrier: float
    checks: tuple
    rows: tuple = field(default=(), repr=False)  # (region, x, residual)

    @property
    def passed(self) -> bool:
        return all(ch.passed for ch in self.checks)

    def check(self, name) -> Check:
        return next(ch for ch in self.checks if ch.name == name)


@dataclass(frozen=True)
class GridSpec:
    n_interior: int = 200
    n_above: int = 50
    n_insolvent: int = 100
    width_above: float = 10.0
    width_below: float = 10.0
    n_slope: int = 400


def _open_grid(lo, hi, n):
    return np.linspace(lo, hi, n + 2)[1:-1]


def shift_off_knots(xs, knots, lo, hi, delta=KNOT_DELTA):
    """Move grid points that sit within ``delta`` of a knot by ``2 delta``."""
    out = np.array(xs, dtype=float)
    for i, x in enumerate(out):
        for k in knots:
            if abs(x - k) < delta:
                x = k + 2 * delta if k + 2 * delta < hi else k - 2 * delta
        out[i] = min(max(x, lo + delta), hi - delta) if hi > lo + 2 * delta else x
    return out


def _residuals(ctx, cand, xs, discount, workers):
    fn = lambda x: apply_candidate(ctx, cand, x) - discount * float(cand.f(x))
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return np.array(list(ex.map(fn, xs)))
    return np.array([fn(x) for x in xs])


def verify_solution(sol: BarrierSolution, grid: GridSpec = GridSpec(), y: float | None = None,
                    workers: int = 1, ctx_opts: dict | None = None) -> VerificationReport:
    """Evaluate the three HJB relations and the slope condition on grids."""
    model = sol.model
    y = sol.d_star if y is None else float(y)
    q, c, lam = model.q, model.c, model.lam
    opts = ctx_opts or {}
    ctx = GeneratorContext(model.solvent, **opts)
    ctx_t = GeneratorContext(model.insolvent, **opts)
    sc = solvent_candidate(sol, y)
    ic = insolvent_candidate(sol, y)
    v_scale = max(1.0, abs(float(value_solvent(sol, y, y))))

    x_in = shift_off_knots(_open_grid(0.0, y, grid.n_interior), sc.knots, 0.0, y)
    x_up = shift_off_knots(_open_grid(y, y + grid.width_above, grid.n_above), sc.knots, y, y + grid.width_above)
    x_ins = shift_off_knots(_open_grid(-grid.width_below, c, grid.n_insolvent), ic.knots, -grid.width_below, c)

    r_in = _residuals(ctx, sc, x_in, q, workers)
    r_up = _residuals(ctx, sc, x_up, q, workers)
    r_ins = _residuals(ctx_t, ic, x_ins, q + lam, workers)
    x_sl = np.linspace(c, y + grid.width_above, grid.n_slope)
    slope = value_solvent_prime(sol, x_sl, y)

    tol_in = 1e-6 * v_scale
    checks = (
        Check("interior", float(np.max(np.abs(r_in))), tol_in, bool(np.max(np.abs(r_in)) <= tol_in), len(x_in)),
        Check("above_barrier", float(np.max(r_up)), 1e-8, bool(np.max(r_up) <= 1e-8), len(x_up)),
        Check("insolvent", float(np.max(np.abs(r_ins))), 1e-8, bool(np.max(np.abs(r_ins)) <= 1e-8), len(x_ins)),
        Check("slope", float(np.min(slope)), 1 - 1e-9, bool(np.min(slope) >= 1 - 1e-9), len(x_sl)),
    )
    rows = tuple(("interior", float(a), float(b)) for a, b in zip(x_in, r_in))
    rows += tuple(("above_barrier", float(a), float(b)) for a, b in zip(x_up, r_up))
    rows += tuple(("insolvent", float(a), float(b)) for a, b in zip(x_ins, r_ins))
    return VerificationReport(sol.d_star, y, checks, rows)
