import math

import numpy as np
import pytest

from chapter11 import hjb_verify as hv
from chapter11 import value_engine as ve
from chapter11.errors import KnotProximityError
from chapter11.levy_model import LevyModel, psi

from conftest import random_pair


@pytest.mark.parametrize("theta", [0.2, 0.5, 1.0])
def test_exponential_eigenfunction_quadrature(ref, mixed, theta):
    for model in (ref.solvent, mixed.solvent, mixed.insolvent):
        ctx = hv.GeneratorContext(model)
        cand = hv.exponential_candidate(theta)
        for x in (-0.5, 0.4, 3.0):
            got = hv.apply_candidate(ctx, cand, x)
            assert got == pytest.approx(psi(model, theta) * math.exp(theta * x), rel=1e-7)


def test_exponential_eigenfunction_closed_tail(ref):
    ctx = hv.GeneratorContext(ref.solvent)
    got = hv.generator_apply(ctx, lambda u: math.exp(0.5 * u), lambda u: 0.5 * math.exp(0.5 * u),
                             lambda u: 0.25 * math.exp(0.5 * u), 1.2, below=hv.ExpBranch(0.3, 1.0, 0.5))
    assert got == pytest.approx(psi(ref.solvent, 0.5) * math.exp(0.6), rel=1e-12)


def test_constant_and_linear(ref, mixed):
    for model in (ref.solvent, mixed.solvent):
        ctx = hv.GeneratorContext(model)
        one = hv.Candidate(lambda u: 1.0, lambda u: 0.0, lambda u: 0.0)
        assert hv.apply_candidate(ctx, one, 0.7) == pytest.approx(0.0, abs=1e-15)
        lin = hv.Candidate(lambda u: u, lambda u: 1.0, lambda u: 0.0)
        hand = model.drift_p - model.jumps.intensity * model.jumps.mean_size
        assert hv.apply_candidate(ctx, lin, 1.3) == pytest.approx(hand, rel=1e-10)


def test_brownian_only():
    ctx = hv.GeneratorContext(LevyModel(0.3, 1.2))
    assert hv.apply_candidate(ctx, hv.exponential_candidate(0.5), 1.0) == pytest.approx(
        psi(ctx.model, 0.5) * math.exp(0.5), rel=1e-14)


def test_knot_proximity(ref_sol):
    cand = hv.solvent_candidate(ref_sol)
    ctx = hv.GeneratorContext(ref_sol.model.solvent)
    with pytest.raises(KnotProximityError):
        hv.apply_candidate(ctx, cand, ref_sol.d_star + 1e-8)
    xs = hv.shift_off_knots([0.5, ref_sol.d_star, 1.0 + 1e-9], cand.knots, 0.0, 10.0)
    for x in xs:
        assert min(abs(x - k) for k in cand.knots) >= hv.KNOT_DELTA


def test_reference_certificate(ref_sol):
    rep = hv.verify_solution(ref_sol)
    assert rep.passed, rep.checks
    assert rep.check("interior").value <= 1e-6 * max(1, ref_sol.V(ref_sol.d_star))
    assert rep.check("insolvent").value <= 1e-8
    assert rep.check("above_barrier").value <= 1e-8
    assert rep.check("slope").value >= 1 - 1e-9


def test_above_barrier_spot_points(ref_sol):
    cand = hv.solvent_candidate(ref_sol)
    ctx = hv.GeneratorContext(ref_sol.model.solvent)
    q = ref_sol.model.q
    for dx in (0.5, 1.0, 5.0):
        x = ref_sol.d_star + dx
        assert hv.apply_candidate(ctx, cand, x) - q * ref_sol.V(x) <= 1e-8


def test_interior_identity_above_optimum(ref_sol):
    rep = hv.verify_solution(ref_sol, y=ref_sol.d_star + 1.0, grid=hv.GridSpec(60, 10, 10))
    assert rep.check("interior").passed


def test_suboptimal_barrier_fails_above(ref_sol):
    # below d* the candidate violates (A - q)V <= 0 just above its barrier
    rep = hv.verify_solution(ref_sol, y=ref_sol.model.c + 0.5, grid=hv.GridSpec(40, 20, 10))
    assert rep.check("interior").passed
    assert not rep.check("above_barrier").passed or not rep.check("slope").passed


@pytest.mark.parametrize("seed", [1, 2])
def test_random_models_certify(seed):
    m = random_pair(np.random.default_rng(500 + seed))
    sol = ve.optimal_barrier(m)
    rep = hv.verify_solution(sol, grid=hv.GridSpec(40, 15, 20))
    assert rep.check("interior").passed
    assert rep.check("insolvent").passed


def test_mixed_model_certificate(mixed):
    rep = hv.verify_solution(ve.optimal_barrier(mixed), grid=hv.GridSpec(60, 20, 30))
    assert rep.passed, rep.checks


def test_workers_do_not_change_report(ref_sol):
    g = hv.GridSpec(20, 10, 10)
    a = hv.verify_solution(ref_sol, g, workers=1)
    b = hv.verify_solution(ref_sol, g, workers=3)
    assert a.rows == b.rows
