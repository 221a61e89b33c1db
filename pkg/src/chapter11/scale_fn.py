"""Scale functions as exponential sums.

For a rational Laplace exponent, partial fractions give

    1 / (psi(theta) - q) = sum_j c_j / (theta - theta_j),   c_j = 1 / psi'(theta_j),

over the real roots ``theta_j`` of ``psi = q``, hence
``W_q(x) = sum_j c_j exp(theta_j x)`` on ``x >= 0``. The second family
collapses to the same basis,

    Z_q(x, theta) = sum_j c_j delta_j(theta) exp(theta_j x),
    delta_j(theta) = (psi(theta) - q) / (theta - theta_j),

and ``delta_j`` is evaluated as an exact divided difference, so neither
``theta`` near a root nor large ``x`` causes cancellation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .levy_model import (
    LevyModel,
    _psi_prime_raw,
    _psi_raw,
    phi_inverse,
    psi_divided_difference,
    roots_of_psi_eq_q,
)

CONFLUENT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ScaleBasis:
    """Roots and coefficients of ``W_q`` for one model and one discount."""

    model: LevyModel
    q: float
    roots: np.ndarray
    coeffs: np.ndarray
    shift: float = 0.0  # exponential tilt applied to the argument, see tilted_basis

    @property
    def phi(self) -> float:
        """Largest root; the exponential growth rate of ``W_q``."""
        return float(self.roots[0])

    @property
    def w0(self) -> float:
        """``W_q(0+)``."""
        return float(np.sum(self.coeffs))

    def delta(self, theta: float) -> np.ndarray:
        """Per-root divided differences ``(psi(theta) - q) / (theta - theta_j)``."""
        # under a tilt the root theta_j of the tilted exponent is theta_j(q') - shift
        return np.asarray(
            psi_divided_difference(self.model, theta + self.shift, self.roots + self.shift),
            dtype=float,
        )


def scale_basis(model: LevyModel, q: float) -> ScaleBasis:
    roots = roots_of_psi_eq_q(model, q)
    coeffs = 1.0 / _psi_prime_raw(model, roots)
    return ScaleBasis(model, float(q), roots, coeffs)


def tilted_basis(model: LevyModel, vartheta: float, q: float) -> ScaleBasis:
    """Basis of ``W^vartheta_q(x) = exp(-vartheta x) W_{q + psi(vartheta)}(x)``.

    This is the q-scale function of the process under the exponential change
    of measure with parameter ``vartheta``.
    """
    if vartheta < 0:
        raise DomainError("vartheta must be nonnegative")
    q_shift = float(q) + float(_psi_raw(model, vartheta))
    if q_shift < 0:
        raise DomainError("q + psi(vartheta) must be nonnegative")
    if vartheta == 0:
        return scale_basis(model, q)
    if q_shift == 0:
        raise DomainError("q + psi(vartheta) = 0 has a zero root; use q > 0")
    base = scale_basis(model, q_shift)
    return ScaleBasis(model, float(q), base.roots - vartheta, base.coeffs, float(vartheta))


def _expsum(a, roots, x):
    """sum_j a_j exp(theta_j x) for x >= 0 with the leading growth factored out."""
    x = np.asarray(x, dtype=float)
    lead = roots[0]
    inner = np.exp(np.multiply.outer(x, roots - lead)) @ a
    with np.errstate(over="ignore"):
        return inner * np.exp(lead * x)


def _finish(x, out):
    out = np.asarray(out)
    return float(out) if np.ndim(x) == 0 else out


def w(basis: ScaleBasis, x):
    """``W_q(x)``; zero for ``x < 0``, right-continuous at 0."""
    xa = np.asarray(x, dtype=float)
    pos = np.where(xa >= 0, xa, 0.0)
    out = np.where(xa >= 0, _expsum(basis.coeffs, basis.roots, pos), 0.0)
    return _finish(x, out)


def w_prime(basis: ScaleBasis, x):
    """``W_q'(x)``; right derivative at 0, zero below 0."""
    xa = np.asarray(x, dtype=float)
    pos = np.where(xa >= 0, xa, 0.0)
    out = np.where(xa >= 0, _expsum(basis.coeffs * basis.roots, basis.roots, pos), 0.0)
    return _finish(x, out)


def w_second(basis: ScaleBasis, x):
    """``W_q''(x)`` for ``x > 0``. Undefined at the kink ``x = 0``."""
    xa = np.asarray(x, dtype=float)
    pos = np.where(xa >= 0, xa, 0.0)
    out = np.where(xa >= 0, _expsum(basis.coeffs * basis.roots**2, basis.roots, pos), 0.0)
    return _finish(x, out)


def _z_coeffs(basis, theta):
    return basis.coeffs * basis.delta(theta)


def z(basis: ScaleBasis, x, theta: float = 0.0):
    """``Z_q(x, theta)``; equals ``exp(theta x)`` for ``x < 0``."""
    if theta < 0:
        raise DomainError("theta must be nonnegative")
    xa = np.asarray(x, dtype=float)
    pos = np.where(xa >= 0, xa, 0.0)
    neg = np.where(xa < 0, xa, 0.0)
    out = np.where(xa >= 0, _expsum(_z_coeffs(basis, theta), basis.roots, pos), np.exp(theta * neg))
    return _finish(x, out)


def z_prime(basis: ScaleBasis, x, theta: float = 0.0):
    """``d/dx Z_q(x, theta)``; the right derivative at 0."""
    if theta < 0:
        raise DomainError("theta must be nonnegative")
    xa = np.asarray(x, dtype=float)
    pos = np.where(xa >= 0, xa, 0.0)
    neg = np.where(xa < 0, xa, 0.0)
    a = _z_coeffs(basis, theta) * basis.roots
    out = np.where(xa >= 0, _expsum(a, basis.roots, pos), theta * np.exp(theta * neg))
    return _finish(x, out)


def z_second(basis: ScaleBasis, x, theta: float = 0.0):
    if theta < 0:
        raise DomainError("theta must be nonnegative")
    xa = np.asarray(x, dtype=float)
    pos = np.where(xa >= 0, xa, 0.0)
    neg = np.where(xa < 0, xa, 0.0)
    a = _z_coeffs(basis, theta) * basis.roots**2
    out = np.where(xa >= 0, _expsum(a, basis.roots, pos), theta**2 * np.exp(theta * neg))
    return _finish(x, out)


def exp_weighted_integral(basis: ScaleBasis, theta: float, x: float) -> float:
    """``int_0^x exp(-theta w) W_q(w) dw`` in closed form."""
    gaps = basis.roots - theta
    terms = np.empty_like(gaps)
    near = np.abs(gaps) < CONFLUENT_TOL
    # expm1(g x) / g -> x (1 + g x / 2) as g -> 0
    terms[near] = x * (1.0 + 0.5 * gaps[near] * x)
    far = ~near
    terms[far] = np.expm1(gaps[far] * x) / gaps[far]
    return float(np.sum(basis.coeffs * terms))


def laplace_transform(basis: ScaleBasis, theta):
    """``int_0^inf exp(-theta x) W_q(x) dx`` for ``theta > Phi_q``."""
    t = np.asarray(theta, dtype=float)
    if np.any(t <= basis.phi):
        raise DomainError("transform exists only for theta > Phi_q")
    out = np.sum(basis.coeffs / (t[..., None] - basis.roots), axis=-1)
    return _finish(theta, out)


def psi_minus_q(basis: ScaleBasis, theta: float) -> float:
    return float(_psi_raw(basis.model, theta + basis.shift) - _psi_raw(basis.model, basis.shift)) - basis.q


__all__ = [
    "ScaleBasis",
    "scale_basis",
    "tilted_basis",
    "w",
    "w_prime",
    "w_second",
    "z",
    "z_prime",
    "z_second",
    "exp_weighted_integral",
    "laplace_transform",
    "phi_inverse",
]
