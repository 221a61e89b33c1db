import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from chapter11.levy_model import JumpSpec, LevyModel, cramer_lundberg
from chapter11.value_engine import Chapter11Model, optimal_barrier, reference_model

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def ref():
    return reference_model()


@pytest.fixture(scope="session")
def ref_sol(ref):
    return optimal_barrier(ref)


@pytest.fixture(scope="session")
def mixed():
    """Two-component claims with a Gaussian part in both regimes."""
    X = LevyModel(2.0, 0.3, JumpSpec(1.5, ((0.6, 1.0), (0.4, 3.0))))
    Xt = LevyModel(1.0, 0.2, JumpSpec(1.0, ((0.5, 2.0), (0.5, 0.5))))
    return Chapter11Model(X, Xt, c=0.8, q=0.04, lam=2.0)


def random_cl_pair(rng: np.random.Generator) -> Chapter11Model:
    """Cramer-Lundberg pair with net profit in the solvent regime."""
    mu = rng.uniform(0.5, 3.0)
    lam0 = rng.uniform(0.5, 2.0)
    p = lam0 / mu * rng.uniform(1.1, 2.5)
    pt = p * rng.uniform(0.5, 1.0)
    return Chapter11Model(
        cramer_lundberg(p, lam0, mu),
        cramer_lundberg(pt, rng.uniform(0.5, 2.0), rng.uniform(0.5, 3.0)),
        c=rng.uniform(0.2, 2.0),
        q=rng.uniform(0.01, 0.2),
        lam=rng.uniform(0.2, 3.0),
    )


def random_pair(rng: np.random.Generator) -> Chapter11Model:
    """Hyperexponential claims, random sigma (possibly zero)."""

    def proc():
        m = int(rng.integers(1, 4))
        rates = np.sort(rng.uniform(0.3, 5.0, m))
        while m > 1 and np.min(np.diff(rates)) < 0.05:
            rates = np.sort(rng.uniform(0.3, 5.0, m))
        w = rng.dirichlet(np.ones(m))
        w[-1] = 1.0 - w[:-1].sum()
        lam0 = rng.uniform(0.3, 2.0)
        sigma = 0.0 if rng.random() < 0.5 else rng.uniform(0.05, 0.8)
        p = lam0 * float(np.sum(w / rates)) * rng.uniform(1.05, 2.0)
        return LevyModel(p, sigma, JumpSpec(lam0, tuple(zip(w, rates))))

    return Chapter11Model(proc(), proc(), c=rng.uniform(0.2, 2.0), q=rng.uniform(0.01, 0.2),
                          lam=rng.uniform(0.2, 3.0))


@st.composite
def cl_models(draw):
    mu = draw(st.floats(0.3, 4.0))
    lam0 = draw(st.floats(0.2, 3.0))
    p = lam0 / mu * draw(st.floats(1.05, 3.0))
    return cramer_lundberg(p, lam0, mu)


@st.composite
def levy_models(draw):
    m = draw(st.integers(1, 3))
    rates = sorted(draw(st.lists(st.floats(0.3, 6.0), min_size=m, max_size=m, unique=True)))
    if m > 1 and min(b - a for a, b in zip(rates, rates[1:])) < 0.05:
        rates = [0.5 + 1.3 * k for k in range(m)]
    raw = draw(st.lists(st.floats(0.1, 1.0), min_size=m, max_size=m))
    w = [r / sum(raw) for r in raw]
    w[-1] = 1.0 - sum(w[:-1])
    lam0 = draw(st.floats(0.2, 3.0))
    sigma = draw(st.sampled_from([0.0, 0.0, 0.1, 0.5, 1.0]))
    mean = sum(a / b for a, b in zip(w, rates))
    p = lam0 * mean * draw(st.floats(1.05, 3.0))
    return LevyModel(p, sigma, JumpSpec(lam0, tuple(zip(w, rates))))


# ---------------------------------------------------------------------------
# acceptance summary: one line per criterion at the end of the run

ACCEPTANCE = {}


def record_acceptance(number, passed, detail):
    ACCEPTANCE[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
