"""Monte Carlo estimators for the controlled surplus process."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace

import numba
import numpy as np

from ..errors import DomainError
from ..value_engine import Chapter11Model
from . import kernels as K
from .rng import STREAM_STRIDE, mix_py

SCHEMES = ("exact_bv", "euler")
WORKERS_ENV = "CH11_WORKERS"

if "NUMBA_THREADING_LAYER" not in os.environ:
    # the bundled TBB is often too old; the portable pool avoids the warning
    numba.config.THREADING_LAYER = "workqueue"


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise DomainError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from None
    return numba.config.NUMBA_NUM_THREADS


@dataclass(frozen=True)
class SimConfig:
    n_paths: int
    seed: int
    eps_trunc: float = 1e-9
    scheme: str = "exact_bv"
    dt: float = 1e-3
    regime_switching: bool = True
    workers: int | None = None

    def __post_init__(self):
        if not (isinstance(self.n_paths, (int, np.integer)) and self.n_paths > 1):
            raise DomainError("n_paths must be an integer >= 2")
        if not 0 < self.eps_trunc < 1:
            raise DomainError("eps_trunc must lie in (0, 1)")
        if self.scheme not in SCHEMES:
            raise DomainError(f"scheme must be one of {SCHEMES}")
        if self.scheme == "euler" and not self.dt > 0:
            raise DomainError("dt must be positive")

    def horizon(self, q: float) -> float:
        """Time after which exp(-q t) < eps_trunc."""
        return -math.log(self.eps_trunc) / q


@dataclass(frozen=True)
class Estimate:
    mean: float
    std_err: float
    ci95: tuple
    n: int
    truncation_bias_bound: float

    def z_score(self, target: float) -> float:
        return (self.mean - target) / self.std_err if self.std_err > 0 else (0.0 if self.mean == target else math.inf)


@dataclass(frozen=True)
class PathBatch:
    """Raw per-path output of one simulation run."""

    payoff: np.ndarray
    t_end: np.ndarray
    status: np.ndarray
    spells: np.ndarray
    horizon: float
    residual_rate: float  # bound on expected remaining payoff per unit discount at truncation

    @property
    def truncated(self) -> np.ndarray:
        return self.status == K.TRUNCATED


def _jump_arrays(m):
    if m.jumps is None:
        return 0.0, np.ones(1), np.ones(1)
    w = m.jumps.weights
    cw = np.cumsum(w)
    cw[-1] = 1.0
    return m.jumps.intensity, cw, m.jumps.rates.astype(float)


def _set_workers(cfg):
    n = cfg.workers or default_workers()
    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


def run_paths(model: Chapter11Model, x0: float, i0: int, cfg: SimConfig,
              d: float = math.inf, z: float = math.inf, mode: int = K.MODE_VALUE,
              residual_rate: float | None = None) -> PathBatch:
    """Simulate ``cfg.n_paths`` paths and return per-path payoffs."""
    X, Xt = model.solvent, model.insolvent
    if i0 not in (0, 1):
        raise DomainError("i0 must be 0 (solvent) or 1 (insolvent)")
    if i0 == 1 and not cfg.regime_switching:
        raise DomainError("insolvent start needs regime switching")
    if cfg.scheme == "exact_bv":
        if X.sigma != 0 or Xt.sigma != 0:
            raise DomainError("exact_bv requires sigma = 0 in both regimes")
        if X.drift_p <= 0:
            raise DomainError("exact_bv requires a positive solvent premium")
    lam0, cw, rt = _jump_arrays(X)
    lamt, cwt, rtt = _jump_arrays(Xt)
    base = np.uint64(mix_py(int(cfg.seed) & ((1 << 64) - 1)))
    stride = np.uint64(STREAM_STRIDE)
    horizon = cfg.horizon(model.q)
    _set_workers(cfg)
    common = (model.c, model.q, model.lam, float(d), float(z), int(mode), bool(cfg.regime_switching), horizon)
    if cfg.scheme == "exact_bv":
        out = K.run_exact(base, stride, int(cfg.n_paths), float(x0), int(i0),
                          X.drift_p, lam0, cw, rt, Xt.drift_p, lamt, cwt, rtt, *common)
    else:
        out = K.run_euler(base, stride, int(cfg.n_paths), float(x0), int(i0),
                          X.drift_p, X.sigma, lam0, cw, rt, Xt.drift_p, Xt.sigma, lamt, cwt, rtt,
                          *common, float(cfg.dt))
    if residual_rate is None:
        residual_rate = X.drift_p / model.q if mode == K.MODE_VALUE else 1.0
    return PathBatch(*out, horizon=horizon, residual_rate=float(residual_rate))


def _estimate(samples, bias):
    n = samples.size
    mean = float(np.sum(samples) / n)
    se = float(np.std(samples, ddof=1) / math.sqrt(n))
    return Estimate(mean, se, (mean - 1.96 * se, mean + 1.96 * se), int(n), float(bias))


def _moment_estimate(batch: PathBatch, n: int, eps: float) -> Estimate:
    s = batch.payoff
    tr = batch.truncated
    r = eps * batch.residual_rate
    bias = float(np.sum((s[tr] + r) ** n - s[tr] ** n) / s.size)
    return _estimate(s**n, bias)


def _check_value_domain(model, d, x0, i0):
    if d < model.c:
        raise DomainError("barrier must be at least c")
    if i0 == 0 and not x0 > 0:
        raise DomainError("solvent start requires x0 > 0")
    if i0 == 1 and not x0 < model.c:
        raise DomainError("insolvent start requires x0 < c")


def _residual_rate(model, cfg, d):
    # dividend rate is at most p under exact_bv; with a Gaussian part use the
    # analytic value at the barrier, the supremum of the expected remainder
    if cfg.scheme == "exact_bv":
        return model.solvent.drift_p / model.q
    from ..value_engine import optimal_barrier, value_solvent

    sol = optimal_barrier(model)
    return float(value_solvent(sol, d, d))


def simulate_value(model: Chapter11Model, d: float, x0: float, i0: int, cfg: SimConfig) -> Estimate:
    """Expected discounted dividends until bankruptcy under barrier ``d``."""
    return simulate_moment(model, 1, d, x0, i0, cfg)


def simulate_moment(model: Chapter11Model, n: int, d: float, x0: float, i0: int, cfg: SimConfig) -> Estimate:
    if n not in (1, 2, 3):
        raise DomainError("n must be 1, 2 or 3")
    _check_value_domain(model, d, x0, i0)
    batch = run_paths(model, x0, i0, cfg, d=d, residual_rate=_residual_rate(model, cfg, d))
    return _moment_estimate(batch, n, cfg.eps_trunc)


def simulate_exit(model: Chapter11Model, z: float, x0: float, i0: int, cfg: SimConfig) -> Estimate:
    """``E[exp(-q zeta_z+); zeta_z+ < T]`` without dividends.

    With ``regime_switching=False`` the path is killed at ruin instead,
    giving the classical two-sided exit transform.
    """
    if cfg.regime_switching:
        if z < model.c:
            raise DomainError("z must be at least c")
        if i0 == 0 and not 0 < x0 <= z:
            raise DomainError("solvent start requires 0 < x0 <= z")
        if i0 == 1 and not x0 < model.c:
            raise DomainError("insolvent start requires x0 < c")
    elif not 0 <= x0 <= z:
        raise DomainError("classical exit requires 0 <= x0 <= z")
    batch = run_paths(model, x0, i0, cfg, z=z, mode=K.MODE_EXIT)
    # payoff after the horizon is at most exp(-q horizon) <= eps
    bias = cfg.eps_trunc * float(np.mean(batch.truncated))
    return _estimate(batch.payoff, bias)


@dataclass(frozen=True)
class BankruptcySummary:
    n: int
    frac_bankrupt: float
    frac_truncated: float
    mean_time: float
    quantiles: dict
    mean_spells: float
    spell_bankrupt_fraction: float


def simulate_bankruptcy(model: Chapter11Model, d: float, x0: float, i0: int, cfg: SimConfig,
                        probs=(0.1, 0.25, 0.5, 0.75, 0.9)) -> BankruptcySummary:
    """Distribution of the bankruptcy time over paths that go bankrupt before truncation."""
    _check_value_domain(model, d, x0, i0)
    b = run_paths(model, x0, i0, cfg, d=d)
    bank = b.status == K.BANKRUPT
    tb = b.t_end[bank]
    closed = ~b.truncated
    spells = int(np.sum(b.spells[closed]))
    qs = {float(pr): (float(np.quantile(tb, pr)) if tb.size else math.nan) for pr in probs}
    return BankruptcySummary(
        n=int(b.status.size),
        frac_bankrupt=float(np.mean(bank)),
        frac_truncated=float(np.mean(b.truncated)),
        mean_time=float(np.mean(tb)) if tb.size else math.nan,
        quantiles=qs,
        mean_spells=float(np.mean(b.spells)),
        spell_bankrupt_fraction=float(np.sum(bank) / spells) if spells else math.nan,
    )


def dt_halving(model: Chapter11Model, d: float, x0: float, i0: int, cfg: SimConfig, levels: int = 3):
    """Euler value estimates at dt, dt/2, ... with the same seed."""
    out = []
    for k in range(levels):
        c2 = replace(cfg, scheme="euler", dt=cfg.dt / 2**k)
        out.append((c2.dt, simulate_value(model, d, x0, i0, c2)))
    return out
