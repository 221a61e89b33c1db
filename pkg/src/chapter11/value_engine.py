"""Barrier dividend strategy under Chapter 11 regime switching.

The surplus follows ``X`` while solvent and ``X_tilde`` while insolvent
(below 0 until it climbs back to the safety level ``c``); bankruptcy
happens when an insolvency spell outlasts an exponential(``lam``) grace
clock. Everything here is expressed through the auxiliary function

    ell(x) = K W_r(x) + exp(-Phi~ c) W_r(c) Z_r(x, Phi~),
    K      = (psi(Phi~) - r) int_0^c exp(-Phi~ w) W_r(w) dw,

with ``Phi~ = Phi~_{r + lam}`` the right inverse of ``psi_tilde``. On
``x >= 0`` ``ell`` is itself an exponential sum over the roots of
``psi = r``, so its derivatives are cheap and exact.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from . import scale_fn as sf
from .errors import BracketError, DomainError, ModelValidationError, NumericalError, UnsupportedModelError
from .levy_model import LevyModel, _psi_raw, phi_inverse

ZERO_BAND = 1e-12
BARRIER_TOL = 1e-9
MAX_MOMENT = 20


class RegimeCase(str, enum.Enum):
    """Sign of ``psi(Phi~_{q+lam}) - q``."""

    POSITIVE = "POSITIVE"
    ZERO = "ZERO"
    NEGATIVE = "NEGATIVE"


@dataclass(frozen=True)
class Chapter11Model:
    solvent: LevyModel
    insolvent: LevyModel
    c: float
    q: float
    lam: float
    check: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        for name in ("c", "q", "lam"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not self.check:
            return
        for name in ("c", "q", "lam"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ModelValidationError("must be positive and finite",
                                           "lambda" if name == "lam" else name)
        for name in ("solvent", "insolvent"):
            try:
                getattr(self, name).validate()
            except ModelValidationError as err:
                raise err.prefixed(name) from None

    def phi_tilde(self, r: float | None = None) -> float:
        """``Phi~_{r + lam}`` for the insolvent process (``r`` defaults to q)."""
        r = self.q if r is None else r
        return _phi_cached(self.insolvent, r + self.lam)

    def replace(self, **changes) -> "Chapter11Model":
        kw = dict(solvent=self.solvent, insolvent=self.insolvent, c=self.c, q=self.q, lam=self.lam)
        kw.update(changes)
        return Chapter11Model(**kw)

    def to_dict(self) -> dict:
        return {
            "solvent": self.solvent.to_dict(),
            "insolvent": self.insolvent.to_dict(),
            "c": self.c,
            "q": self.q,
            "lambda": self.lam,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Chapter11Model":
        if not isinstance(data, dict):
            raise ModelValidationError("expected a JSON object at top level")
        parts = {}
        for name in ("solvent", "insolvent"):
            if name not in data:
                raise ModelValidationError("missing", name)
            try:
                parts[name] = LevyModel.from_dict(data[name])
            except ModelValidationError as err:
                raise err.prefixed(name) from None
        scalars = {}
        for key in ("c", "q", "lambda"):
            if key not in data:
                raise ModelValidationError("missing", key)
            v = data[key]
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ModelValidationError("expected a number", key)
            scalars[key] = float(v)
        return cls(parts["solvent"], parts["insolvent"], scalars["c"], scalars["q"], scalars["lambda"])


@lru_cache(maxsize=512)
def _phi_cached(model: LevyModel, q: float) -> float:
    return phi_inverse(model, q)


@lru_cache(maxsize=512)
def _basis_cached(model: LevyModel, q: float) -> sf.ScaleBasis:
    return sf.scale_basis(model, q)


def reference_model() -> Chapter11Model:
    """Cramer-Lundberg pair used throughout the tests and examples."""
    from .levy_model import cramer_lundberg

    return Chapter11Model(cramer_lundberg(1.5, 1.0, 1.0), cramer_lundberg(1.2, 1.0, 1.0),
                          c=1.0, q=0.05, lam=1.0)


# ---------------------------------------------------------------------------
# ell


class EllEvaluator:
    """``ell_c^{(r, lam)}`` and its first two derivatives at discount ``r``."""

    def __init__(self, model: Chapter11Model, r: float | None = None):
        self.model = model
        self.r = model.q if r is None else float(r)
        self.basis = _basis_cached(model.solvent, self.r)
        self.phi_tilde = model.phi_tilde(self.r)
        c = model.c
        self.gap = float(_psi_raw(model.solvent, self.phi_tilde)) - self.r
        self.integral_c = sf.exp_weighted_integral(self.basis, self.phi_tilde, c)
        delta = self.basis.delta(self.phi_tilde)
        # K = gap * integral, rewritten as -sum c_j delta_j expm1((theta_j - Phi~) c)
        self.k = -float(np.sum(self.basis.coeffs * delta * np.expm1((self.basis.roots - self.phi_tilde) * c)))
        self.w_c = sf.w(self.basis, c)
        self.scale_c = math.exp(-self.phi_tilde * c) * self.w_c
        self.coeffs = self.basis.coeffs * (self.k + self.scale_c * delta)

    def _eval(self, x, order):
        xa = np.asarray(x, dtype=float)
        roots = self.basis.roots
        pos = np.where(xa >= 0, xa, 0.0)
        neg = np.where(xa < 0, xa, 0.0)
        a = self.coeffs * roots**order
        above = sf._expsum(a, roots, pos)
        below = self.phi_tilde**order * self.w_c * np.exp(self.phi_tilde * (neg - self.model.c))
        return sf._finish(x, np.where(xa >= 0, above, below))

    def __call__(self, x):
        return self._eval(x, 0)

    def prime(self, x):
        return self._eval(x, 1)

    def second(self, x):
        return self._eval(x, 2)

    def literal(self, x):
        """Direct assembly from ``W`` and ``Z`` (slower; used as a cross-check)."""
        return (sf.w(self.basis, x) * self.gap * self.integral_c
                + self.scale_c * sf.z(self.basis, x, self.phi_tilde))


def ell(e: EllEvaluator, x):
    return e(x)


def ell_prime(e: EllEvaluator, x):
    return e.prime(x)


def ell_second(e: EllEvaluator, x):
    return e.second(x)


@lru_cache(maxsize=256)
def ell_evaluator(model: Chapter11Model, r: float | None = None) -> EllEvaluator:
    return EllEvaluator(model, r)


def regime_case(model: Chapter11Model) -> RegimeCase:
    q = model.q
    gap = float(_psi_raw(model.solvent, model.phi_tilde())) - q
    if abs(gap) <= ZERO_BAND * max(1.0, q):
        return RegimeCase.ZERO
    return RegimeCase.POSITIVE if gap > 0 else RegimeCase.NEGATIVE


# ---------------------------------------------------------------------------
# optimal barrier


def _convex_argmin(deriv, lo, tol=BARRIER_TOL, name="function"):
    """Minimiser on [lo, inf) of a convex function given its derivative.

    Returns ``lo`` when the derivative is already nonnegative there; flat
    stretches resolve to their right end.
    """
    d_lo = float(deriv(lo))
    if d_lo >= 0:
        return lo
    step = 1.0
    hi = lo + step
    for _ in range(200):
        if float(deriv(hi)) > 0:
            break
        step *= 2.0
        hi = lo + step
    else:
        raise BracketError(f"no upper bracket for the minimiser of {name}")
    a, b = lo, hi
    while b - a > tol:
        mid = 0.5 * (a + b)
        if mid in (a, b):
            break
        if float(deriv(mid)) > 0:
            b = mid
        else:
            a = mid
    return b if abs(float(deriv(a))) < 1e-12 and abs(float(deriv(b))) < 1e-12 else 0.5 * (a + b)


@dataclass(frozen=True, eq=False)
class BarrierSolution:
    model: Chapter11Model
    d_star: float
    regime_case: RegimeCase
    ell: EllEvaluator

    def V(self, x, y=None):
        return value_solvent(self, x, y)

    def V_tilde(self, x, y=None):
        return value_insolvent(self, x, y)

    @cached_property
    def ell_prime_at_barrier(self) -> float:
        return float(self.ell.prime(self.d_star))

    @cached_property
    def value_at_barrier(self) -> float:
        return float(self.ell(self.d_star)) / self.ell_prime_at_barrier


def optimal_barrier(model: Chapter11Model) -> BarrierSolution:
    """Largest minimiser of ``ell'`` over ``[c, inf)``."""
    e = ell_evaluator(model)
    case = regime_case(model)
    c = model.c
    if case is not RegimeCase.POSITIVE:
        return BarrierSolution(model, c, case, e)
    d = _convex_argmin(e.second, c, name="ell'")
    sol = BarrierSolution(model, d, case, e)
    _check_barrier(sol)
    return sol


def _check_barrier(sol: BarrierSolution):
    e, d, c = sol.ell, sol.d_star, sol.model.c
    grid = np.linspace(c, d + 20.0, 401)
    lp = e.prime(grid)
    ref = float(e.prime(d))
    if np.any(lp < ref * (1 - 1e-10) - 1e-12):
        raise NumericalError("ell' has a smaller value than at the computed barrier")
    if float(e.second(d + 1e-6)) < -1e-9:
        raise NumericalError("ell'' negative just above the computed barrier")


# ---------------------------------------------------------------------------
# value functions


def _barrier_level(sol, y):
    y = sol.d_star if y is None else float(y)
    if y < sol.model.c:
        raise DomainError("barrier must be at least c")
    return y


def value_solvent(sol: BarrierSolution, x, y=None):
    """Expected discounted dividends from ``(x, solvent)`` under barrier ``y``.

    Below 0 the insolvent branch is used (the extension by which the
    verification step is stated); with bounded variation ``V`` jumps at 0.
    """
    y = _barrier_level(sol, y)
    e = sol.ell
    lp_y = float(e.prime(y))
    xa = np.asarray(x, dtype=float)
    c, ph = sol.model.c, e.phi_tilde
    out = np.where(
        xa <= 0,
        e.w_c * np.exp(ph * (np.minimum(xa, 0.0) - c)) / lp_y,
        np.where(xa <= y, e(np.minimum(xa, y)) / lp_y, float(e(y)) / lp_y + (xa - y)),
    )
    return sf._finish(x, out)


def value_solvent_prime(sol: BarrierSolution, x, y=None):
    y = _barrier_level(sol, y)
    e = sol.ell
    lp_y = float(e.prime(y))
    xa = np.asarray(x, dtype=float)
    out = np.where(xa <= y, e.prime(np.minimum(xa, y)) / lp_y, 1.0)
    return sf._finish(x, out)


def value_solvent_second(sol: BarrierSolution, x, y=None):
    """Second derivative; the left one at ``x = y``."""
    y = _barrier_level(sol, y)
    e = sol.ell
    lp_y = float(e.prime(y))
    xa = np.asarray(x, dtype=float)
    out = np.where(xa <= y, e.second(np.minimum(xa, y)) / lp_y, 0.0)
    return sf._finish(x, out)


def value_insolvent(sol: BarrierSolution, x, y=None):
    """Expected discounted dividends from ``(x, insolvent)``, ``x < c``."""
    y = _barrier_level(sol, y)
    xa = np.asarray(x, dtype=float)
    if np.any(xa >= sol.model.c):
        raise DomainError("insolvent state requires x < c")
    e = sol.ell
    out = e.w_c * np.exp(e.phi_tilde * (xa - sol.model.c)) / float(e.prime(y))
    return sf._finish(x, out)


# ---------------------------------------------------------------------------
# moments


def _moment_at_barrier(model, n, d):
    out = [1.0]
    prod = 1.0
    for k in range(1, n + 1):
        e = ell_evaluator(model, k * model.q)
        prod *= float(e(d)) / float(e.prime(d))
        out.append(math.factorial(k) * prod)
    return out


def moment(model: Chapter11Model, n: int, x: float, d: float, state: str = "solvent") -> float:
    """n-th moment of the discounted dividends paid until bankruptcy."""
    if not (isinstance(n, (int, np.integer)) and 1 <= n <= MAX_MOMENT):
        raise DomainError(f"n must be an integer in [1, {MAX_MOMENT}]")
    if d < model.c:
        raise DomainError("barrier must be at least c")
    x = float(x)
    at_d = _moment_at_barrier(model, n, d)
    e_n = ell_evaluator(model, n * model.q)
    if state == "solvent":
        if x <= 0:
            raise DomainError("solvent state requires x > 0")
        if x <= d:
            return float(e_n(x)) / float(e_n(d)) * at_d[n]
        return float(sum(math.comb(n, k) * (x - d) ** k * at_d[n - k] for k in range(n + 1)))
    if state == "insolvent":
        if x >= model.c:
            raise DomainError("insolvent state requires x < c")
        return math.exp(e_n.phi_tilde * (x - model.c)) * e_n.w_c / float(e_n(d)) * at_d[n]
    raise DomainError("state must be 'solvent' or 'insolvent'")


# ---------------------------------------------------------------------------
# exit problems


def exit_transform(model: Chapter11Model, x: float, z: float, state: str = "solvent") -> float:
    """``E[exp(-q zeta_z^+); zeta_z^+ < T]`` for the dividend-free process."""
    e = ell_evaluator(model)
    if z < model.c:
        raise DomainError("z must be at least c")
    if state == "solvent":
        if not 0 < x <= z:
            raise DomainError("solvent state requires 0 < x <= z")
        return float(e(x)) / float(e(z))
    if state == "insolvent":
        if not x < model.c:
            raise DomainError("insolvent state requires x < c")
        return math.exp(e.phi_tilde * (x - model.c)) * e.w_c / float(e(z))
    raise DomainError("state must be 'solvent' or 'insolvent'")


def classical_exit_up(basis: sf.ScaleBasis, x, z: float):
    """``E_x[exp(-q tau_z^+); tau_z^+ < tau_0^-] = W_q(x) / W_q(z)``."""
    if z <= 0 or np.any(np.asarray(x) > z):
        raise DomainError("need z > 0 and x <= z")
    return sf.w(basis, x) / sf.w(basis, z)


def classical_exit_down(basis: sf.ScaleBasis, x, z: float, theta: float):
    """``E_x[exp(-q tau_0^- + theta X(tau_0^-)); tau_0^- < tau_z^+]``."""
    if z <= 0 or np.any(np.asarray(x) > z):
        raise DomainError("need z > 0 and x <= z")
    return sf.z(basis, x, theta) - sf.z(basis, z, theta) * sf.w(basis, x) / sf.w(basis, z)


# ---------------------------------------------------------------------------
# Cramer-Lundberg closed forms


@dataclass(frozen=True)
class ClosedForm:
    q_plus: float
    q_minus: float
    a_plus: float
    a_minus: float
    b_plus: float
    b_minus: float
    threshold: float  # ln(B- q- / (B+ q+)) / (q+ - q-)


def _require_cl(model: Chapter11Model):
    x = model.solvent
    if x.sigma != 0 or x.jumps is None or len(x.jumps.components) != 1:
        raise UnsupportedModelError("closed form needs a Cramer-Lundberg X with one exponential component")


def cl_coefficients(model: Chapter11Model) -> ClosedForm:
    """Roots ``q+-``, scale coefficients ``A+-`` and ``ell'`` coefficients ``B+-``."""
    _require_cl(model)
    x = model.solvent
    p, lam0, mu = x.drift_p, x.jumps.intensity, x.jumps.rates[0]
    q, c = model.q, model.c
    b = q + lam0 - mu * p
    disc = math.sqrt(b * b + 4 * p * q * mu)
    qp, qm = (b + disc) / (2 * p), (b - disc) / (2 * p)
    ap, am = (mu + qp) / (qp - qm), (mu + qm) / (qp - qm)
    ph = model.phi_tilde()
    den = (qp - ph) * (qm - ph)
    bp = ap * qp * (mu + ph - (mu + qm) * math.exp((qm - ph) * c)) / (p * den)
    bm = am * qm * (mu + ph - (mu + qp) * math.exp((qp - ph) * c)) / (p * den)
    arg = bm * qm / (bp * qp)
    thr = math.log(arg) / (qp - qm) if arg > 0 else -math.inf
    return ClosedForm(qp, qm, ap, am, bp, bm, thr)


def cl_closed_form_barrier(model: Chapter11Model) -> float:
    """``d* = c v ln(B- q- / (B+ q+)) / (q+ - q-)`` for exponential claims."""
    _require_cl(model)
    if regime_case(model) is not RegimeCase.POSITIVE:
        raise UnsupportedModelError("closed form requires psi(Phi~_{q+lam}) > q")
    cf = cl_coefficients(model)
    return max(model.c, cf.threshold)


def cl_plateau_threshold(model: Chapter11Model, lo=1e-6, hi=None) -> float:
    """Safety level above which the closed-form barrier equals c.

    Solves ``c = threshold(c)``; the ``B`` coefficients depend on ``c``.
    """
    g = lambda c: cl_coefficients(model.replace(c=c)).threshold - c
    if g(lo) <= 0:
        return lo
    hi = hi or 2.0 * max(1.0, model.c)
    for _ in range(200):
        if g(hi) < 0:
            break
        hi *= 2.0
    else:
        raise BracketError("closed-form threshold not bracketed")
    from scipy.optimize import brentq

    return brentq(g, lo, hi, xtol=1e-14, rtol=1e-14)


def plateau_threshold(model: Chapter11Model, lo: float, hi: float, tol: float = 1e-10) -> float:
    """Bisection for the c at which the numeric barrier hits the plateau d* = c.

    ``lo`` must have ``d* > c`` and ``hi`` must have ``d* = c``.
    """
    interior = lambda c: optimal_barrier(model.replace(c=c)).d_star > c

    if not interior(lo) or interior(hi):
        raise BracketError("plateau threshold not bracketed by [lo, hi]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if interior(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# c -> 0 limits


def renaud_limit_barrier(model: Chapter11Model) -> float:
    """Barrier for ``X_tilde == X`` in the limit ``c -> 0``.

    Minimiser over ``[0, inf)`` of ``x -> Z_q'(x, Phi_{q+lam})``.
    """
    if model.insolvent != model.solvent:
        raise DomainError("limit barrier requires identical solvent and insolvent processes")
    basis = _basis_cached(model.solvent, model.q)
    theta = _phi_cached(model.solvent, model.q + model.lam)
    return _convex_argmin(lambda x: sf.z_second(basis, x, theta), 0.0, name="Z_q'")


def degenerate_limit_value(model: Chapter11Model, x):
    """c -> 0 limit of the value functions in the NEGATIVE case (barrier 0)."""
    basis = _basis_cached(model.solvent, model.q)
    ph = model.phi_tilde()
    gap = float(_psi_raw(model.solvent, ph)) - model.q
    denom = ph - gap * basis.w0
    xa = np.asarray(x, dtype=float)
    out = np.where(xa >= 0, xa + 1.0 / denom, np.exp(ph * np.minimum(xa, 0.0)) / denom)
    return sf._finish(x, out)
