"""Spectrally negative Levy processes with rational Laplace exponent.

The family is Brownian motion with drift plus a compound Poisson process of
downward jumps whose sizes are hyperexponential,

    psi(theta) = p theta + sigma^2 theta^2 / 2
                 + lam0 * (sum_i w_i mu_i / (mu_i + theta) - 1).

Every quantity downstream (scale functions, the auxiliary function of the
barrier problem, the generator) is built from ``psi`` and the real roots of
``psi(theta) = q``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import BracketError, DegeneracyError, DomainError, ModelValidationError

WEIGHT_TOL = 1e-12
RATE_GAP = 1e-9
SIMPLE_ROOT_TOL = 1e-9
BISECT_WIDTH = 1e-13
NEWTON_STEPS = 3


@dataclass(frozen=True)
class JumpSpec:
    """Compound Poisson jumps with hyperexponential sizes.

    ``components`` is a tuple of ``(weight, rate)`` pairs; the jump-size
    density is ``sum_i w_i mu_i exp(-mu_i z)``.
    """

    intensity: float
    components: tuple[tuple[float, float], ...]

    def __post_init__(self):
        comps = tuple((float(w), float(mu)) for w, mu in self.components)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "intensity", float(self.intensity))
        self.validate()

    def validate(self):
        if not (self.intensity > 0 and math.isfinite(self.intensity)):
            raise ModelValidationError("must be a positive finite number", "intensity")
        if not self.components:
            raise ModelValidationError("at least one component is required", "components")
        for k, (w, mu) in enumerate(self.components):
            if not (w > 0 and math.isfinite(w)):
                raise ModelValidationError("must be positive", f"components[{k}].weight")
            if not (mu > 0 and math.isfinite(mu)):
                raise ModelValidationError("must be positive", f"components[{k}].rate")
        total = sum(w for w, _ in self.components)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ModelValidationError(
                f"weights sum to {total!r}, expected 1", "components[].weight"
            )
        rates = sorted(mu for _, mu in self.components)
        for a, b in zip(rates, rates[1:]):
            if (b - a) < RATE_GAP * b:
                raise ModelValidationError(
                    f"rates {a!r} and {b!r} are not distinct (relative gap < {RATE_GAP})",
                    "components[].rate",
                )

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.components])

    @property
    def rates(self) -> np.ndarray:
        return np.array([mu for _, mu in self.components])

    @property
    def mean_size(self) -> float:
        return float(np.sum(self.weights / self.rates))


@dataclass(frozen=True)
class LevyModel:
    """Brownian motion with drift ``drift_p`` minus hyperexponential claims.

    ``drift_p`` is the premium rate: the linear drift of the decomposition
    into Gaussian part plus uncompensated jumps. Construct with
    ``strict=False`` only to feed the simulator a process the analytic
    theory excludes (monotone paths).
    """

    drift_p: float
    sigma: float = 0.0
    jumps: Optional[JumpSpec] = None
    strict: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "drift_p", float(self.drift_p))
        object.__setattr__(self, "sigma", float(self.sigma))
        if self.strict:
            self.validate()

    def validate(self):
        if not math.isfinite(self.drift_p):
            raise ModelValidationError("must be finite", "drift_p")
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise ModelValidationError("must be nonnegative and finite", "sigma")
        if self.sigma == 0 and (self.jumps is None or self.drift_p <= 0):
            raise ModelValidationError(
                "process has monotone paths; need sigma > 0, or jumps with drift_p > 0",
                "drift_p" if self.jumps is not None else "jumps",
            )

    @property
    def n_components(self) -> int:
        return 0 if self.jumps is None else len(self.jumps.components)

    @property
    def bounded_variation(self) -> bool:
        return self.sigma == 0

    @property
    def gamma(self) -> float:
        """Compensated drift of the Levy-Khintchine triple (cutoff at z = 1)."""
        if self.jumps is None:
            return self.drift_p
        w, mu = self.jumps.weights, self.jumps.rates
        small = (1.0 - np.exp(-mu) * (1.0 + mu)) / mu
        return float(self.drift_p - self.jumps.intensity * np.sum(w * small))

    @property
    def min_rate(self) -> float:
        return math.inf if self.jumps is None else float(self.jumps.rates.min())

    def to_dict(self) -> dict:
        out = {"drift_p": self.drift_p, "sigma": self.sigma}
        if self.jumps is not None:
            out["jumps"] = {
                "intensity": self.jumps.intensity,
                "components": [{"weight": w, "rate": mu} for w, mu in self.jumps.components],
            }
        return out

    @classmethod
    def from_dict(cls, data: dict, strict: bool = True) -> "LevyModel":
        if not isinstance(data, dict):
            raise ModelValidationError("expected an object")
        if "drift_p" not in data:
            raise ModelValidationError("missing", "drift_p")
        jumps = None
        if data.get("jumps") is not None:
            jd = data["jumps"]
            if not isinstance(jd, dict):
                raise ModelValidationError("expected an object", "jumps")
            comps = jd.get("components")
            if not isinstance(comps, list):
                raise ModelValidationError("expected a list", "jumps.components")
            pairs = []
            for k, comp in enumerate(comps):
                try:
                    pairs.append((_number(comp["weight"]), _number(comp["rate"])))
                except (KeyError, TypeError, ValueError):
                    raise ModelValidationError(
                        "expected {\"weight\": number, \"rate\": number}",
                        f"jumps.components[{k}]",
                    ) from None
            try:
                jumps = JumpSpec(_number(jd.get("intensity")), tuple(pairs))
            except ModelValidationError as err:
                raise err.prefixed("jumps") from None
            except (TypeError, ValueError):
                raise ModelValidationError("expected a number", "jumps.intensity") from None
        try:
            drift = _number(data["drift_p"])
        except (TypeError, ValueError):
            raise ModelValidationError("expected a number", "drift_p") from None
        try:
            sigma = _number(data.get("sigma", 0.0))
        except (TypeError, ValueError):
            raise ModelValidationError("expected a number", "sigma") from None
        return cls(drift, sigma, jumps, strict=strict)


def _number(v) -> float:
    if isinstance(v, bool) or v is None:
        raise TypeError(v)
    return float(v)


def cramer_lundberg(p: float, intensity: float, rate: float, sigma: float = 0.0) -> LevyModel:
    """Premium ``p`` minus exponential(``rate``) claims at Poisson ``intensity``."""
    return LevyModel(p, sigma, JumpSpec(intensity, ((1.0, rate),)))


# ---------------------------------------------------------------------------
# Laplace exponent


def _psi_raw(model: LevyModel, theta):
    """psi on the whole real line minus the poles (no domain check)."""
    theta = np.asarray(theta, dtype=float)
    out = model.drift_p * theta + 0.5 * model.sigma**2 * theta**2
    if model.jumps is not None:
        lam0 = model.jumps.intensity
        acc = np.zeros_like(theta)
        for w, mu in model.jumps.components:
            acc = acc + w * mu / (mu + theta)
        out = out + lam0 * (acc - 1.0)
    return out


def _psi_prime_raw(model: LevyModel, theta):
    theta = np.asarray(theta, dtype=float)
    out = model.drift_p + model.sigma**2 * theta
    if model.jumps is not None:
        lam0 = model.jumps.intensity
        for w, mu in model.jumps.components:
            out = out - lam0 * w * mu / (mu + theta) ** 2
    return out


def _check_domain(model: LevyModel, theta):
    t = np.asarray(theta, dtype=float)
    if np.any(t <= -model.min_rate):
        raise DomainError(f"theta must exceed the pole at {-model.min_rate!r}")


def psi(model: LevyModel, theta):
    """Laplace exponent, ``log E exp(theta X_1)``.

    Defined for ``theta > -min(mu_i)``; arrays are evaluated elementwise.
    """
    _check_domain(model, theta)
    return _scalar(_psi_raw(model, theta))


def psi_prime(model: LevyModel, theta):
    """Exact derivative of :func:`psi`."""
    _check_domain(model, theta)
    return _scalar(_psi_prime_raw(model, theta))


def psi_divided_difference(model: LevyModel, a, b):
    """``(psi(a) - psi(b)) / (a - b)``, evaluated without cancellation.

    Equals ``psi_prime(a)`` when ``a == b``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = model.drift_p + 0.5 * model.sigma**2 * (a + b)
    if model.jumps is not None:
        lam0 = model.jumps.intensity
        for w, mu in model.jumps.components:
            out = out - lam0 * w * mu / ((mu + a) * (mu + b))
    return _scalar(out)


def levy_tail(model: LevyModel, x):
    """Tail of the Levy measure, ``nu((x, inf)) = lam0 sum_i w_i exp(-mu_i x)``."""
    if model.jumps is None:
        raise DomainError("model has no jumps")
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("x must be positive")
    out = np.zeros_like(x)
    for w, mu in model.jumps.components:
        out = out + w * np.exp(-mu * x)
    return _scalar(model.jumps.intensity * out)


def _scalar(a):
    a = np.asarray(a)
    return float(a) if a.ndim == 0 else a


# ---------------------------------------------------------------------------
# Roots


def _bisect(f, lo, hi, sign_lo, max_iter=400):
    """Bisection on (lo, hi) where f has sign ``sign_lo`` near lo and the
    opposite sign near hi. Endpoints are never evaluated."""
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= BISECT_WIDTH * max(1.0, abs(mid)) or mid in (lo, hi):
            break
        v = f(mid)
        if v == 0:
            return mid
        if (v > 0) == (sign_lo > 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _newton_polish(model, q, theta, lo, hi):
    for _ in range(NEWTON_STEPS):
        d = float(_psi_prime_raw(model, theta))
        if d == 0:
            break
        step = (float(_psi_raw(model, theta)) - q) / d
        cand = theta - step
        if not (lo < cand < hi):
            break
        theta = cand
    return theta


def _upper_bracket(model, q, start=1.0):
    hi = max(start, 1.0)
    for _ in range(2000):
        if float(_psi_raw(model, hi)) > q:
            return hi
        hi *= 2.0
    raise BracketError("could not bracket the right inverse of psi")


def phi_inverse(model: LevyModel, q: float) -> float:
    """Right inverse ``Phi_q = sup{theta >= 0 : psi(theta) = q}``."""
    q = float(q)
    if q < 0:
        raise DomainError("q must be nonnegative")
    f = lambda t: float(_psi_raw(model, t)) - q
    if q == 0:
        if float(_psi_prime_raw(model, 0.0)) >= 0:
            return 0.0
        # psi dips below zero on (0, argmin); the root lies beyond the argmin
        hi = _upper_bracket(model, 0.0)
        lo = _bisect(lambda t: float(_psi_prime_raw(model, t)), 0.0, hi, -1.0)
        root = _bisect(f, lo, hi, -1.0)
        return _newton_polish(model, q, root, lo, hi)
    hi = _upper_bracket(model, q)
    root = _bisect(f, 0.0, hi, -1.0)
    return _newton_polish(model, q, root, 0.0, hi)


def _root_intervals(model: LevyModel, q: float):
    """Open intervals each holding exactly one root, with the sign of
    ``psi - q`` at the left end."""
    poles = sorted(-mu for mu in (model.jumps.rates if model.jumps is not None else []))
    intervals = []
    right_pole = poles[-1] if poles else -math.inf
    # negative root between the rightmost pole (or -inf) and 0
    if poles:
        intervals.append((right_pole, 0.0, +1.0))
    # one root between consecutive poles
    for a, b in zip(poles, poles[1:]):
        intervals.append((a, b, +1.0))
    if model.sigma > 0:
        left = poles[0] if poles else 0.0
        lo = left - 1.0
        for _ in range(2000):
            if float(_psi_raw(model, lo)) > q:
                break
            lo = left - 2.0 * (left - lo)
        else:
            raise BracketError("could not bracket the leftmost root")
        if poles:
            intervals.append((lo, left, +1.0))
        else:
            intervals.append((lo, 0.0, +1.0))
    return intervals


def roots_of_psi_eq_q(model: LevyModel, q: float) -> np.ndarray:
    """All real solutions of ``psi(theta) = q`` for ``q > 0``, descending.

    There are ``m + 1`` roots without a Gaussian part and ``m + 2`` with one,
    ``m`` being the number of jump components. The largest is ``Phi_q``.
    """
    q = float(q)
    if not q > 0:
        raise DomainError("q must be positive")
    f = lambda t: float(_psi_raw(model, t)) - q
    roots = [phi_inverse(model, q)]
    for lo, hi, sgn in _root_intervals(model, q):
        r = _bisect(f, lo, hi, sgn)
        roots.append(_newton_polish(model, q, r, lo, hi))
    roots = np.array(sorted(roots, reverse=True))
    expected = model.n_components + (2 if model.sigma > 0 else 1)
    if len(roots) != expected:
        raise DegeneracyError(f"found {len(roots)} roots, expected {expected}")
    slopes = np.abs(_psi_prime_raw(model, roots))
    if np.any(slopes < SIMPLE_ROOT_TOL) or np.any(np.diff(roots) >= 0):
        raise DegeneracyError(
            "psi(theta) = q has a near-multiple root; perturb the jump rates or q"
        )
    return roots
