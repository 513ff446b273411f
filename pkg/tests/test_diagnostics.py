import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from glimm_escape import diagnostics as dg
from glimm_escape import euler, glimm, riemann
from conftest import random_states
from oracles import central_jacobian

ANCHOR = np.array([1.0, 0.5, 2.5])


def test_zero_jump_has_zero_strength(gas):
    assert np.array_equal(dg.strengths(ANCHOR, ANCHOR, ANCHOR, gas), np.zeros(3))


def test_eigenvector_jump(gas):
    R = euler.right_eigenvectors(ANCHOR, gas)
    for i in range(3):
        d = 1e-3
        eps = dg.strengths(ANCHOR, ANCHOR + d * R[:, i], ANCHOR, gas)
        np.testing.assert_allclose(eps, d * np.eye(3)[i], atol=1e-12)


def test_strengths_linear_in_jump(gas, rng):
    U = random_states(rng, 20)
    d1, d2 = rng.normal(size=(2, 20, 3))
    a = dg.strengths(U, U + d1 + 2.0 * d2, U, gas)
    b = dg.strengths(U, U + d1, U, gas) + 2.0 * dg.strengths(U, U + d2, U, gas)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


def test_linearised_strengths_match_the_fan(gas):
    """Off-family parts of each wave's jump are second order in the jump size."""
    U_L = np.asarray(euler.conserved(1.0, 0.3, 1.0, gas))
    worst = []
    for delta in (1e-2, 1e-3):
        U_R = np.asarray(euler.conserved(1.0 + delta, 0.3 - delta, 1.0 + 2 * delta, gas))
        fan = riemann.solve_riemann(U_L, U_R, gas)
        off = 0.0
        for i, (a, b) in enumerate(zip(fan.states[:-1], fan.states[1:])):
            e = dg.strengths(a, b, U_L, gas)
            off = max(off, np.abs(np.delete(e, i)).max())
        worst.append(off / delta**2)
    assert worst[1] < 2.0 * worst[0] + 1e-6
    assert worst[1] < 10.0


def test_interaction_potential_examples():
    zero = np.zeros(3)
    assert dg.interaction_potential(zero, zero) == 0.0
    a, b = 0.3, -0.2
    assert dg.interaction_potential(np.array([0.0, 0.0, a]), np.array([b, 0.0, 0.0])) == pytest.approx(abs(a * b))
    # same family, both rarefactions: no approach
    assert dg.interaction_potential(np.array([a, 0, 0]), np.array([b, 0, 0])) == 0.0
    # same family with a shock on one side: approach
    assert dg.interaction_potential(np.array([a, 0, 0]), np.array([b, 0, 0]),
                                    (True, False, False)) == pytest.approx(abs(a * b))
    # a 1-wave on the left never approaches a 3-wave on the right
    assert dg.interaction_potential(np.array([a, 0, 0]), np.array([0, 0, b]), (True,) * 3, (True,) * 3) == 0.0


@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3), st.lists(st.floats(-1, 1), min_size=3, max_size=3),
       st.lists(st.booleans(), min_size=3, max_size=3), st.lists(st.booleans(), min_size=3, max_size=3))
def test_potential_nonnegative_and_vanishes(a, b, sa, sb):
    a, b = np.array(a), np.array(b)
    assert dg.interaction_potential(a, b, sa, sb) >= 0.0
    assert dg.interaction_potential(np.zeros(3), b, sa, sb) == 0.0
    assert dg.interaction_potential(a, np.zeros(3), sa, sb) == 0.0


def test_quadratic_potential_matches_pairwise_sum(rng):
    for n in (0, 1, 2, 7, 30):
        eps = rng.normal(size=(n, 3))
        shock = rng.random((n, 3)) < 0.4
        brute = sum(dg.interaction_potential(eps[i], eps[j], shock[i], shock[j])
                    for i in range(n) for j in range(i + 1, n))
        assert dg.quadratic_potential(eps, shock) == pytest.approx(brute, rel=1e-12, abs=1e-15)


def test_glimm_functional_examples():
    F = dg.glimm_functional(np.zeros((0, 3)), np.zeros((0, 3), bool), K=5.0, K1=2.0)
    assert F.F == 0.0
    F = dg.glimm_functional(np.array([[0.0, -0.4, 0.0]]), np.zeros((1, 3), bool), K=5.0, K1=2.0)
    assert F.F == pytest.approx(0.4) and F.Q == 0.0
    F = dg.glimm_functional(np.array([[0.0, 0.0, 0.1], [0.2, 0.0, 0.0]]), np.zeros((2, 3), bool), K=3.0, K1=2.0,
                            alpha0=0.05, beta1=0.01, l_B_sum=0.02)
    assert F.Q == pytest.approx(0.02)
    assert F.L == pytest.approx(0.3 + 0.05 + 2.0 * 0.03)
    assert F.F == pytest.approx(F.L + 3.0 * 0.02)


def test_degenerate_diamond_is_source_only(planet):
    q = euler.HeatProfile("gaussian_bump", (2.0, 1.25, 0.2))
    U_M = np.array([1.0, 1.5, 4.0])
    dt, dx = 1e-3, 2e-3
    C2 = float(dg.source_constant(U_M, 1.2, 1.0, q, planet))
    d = dg.Diamond(np.zeros(3), np.zeros(3), np.array([0.5, 0.0, 0.0]) * C2 * dt * dx, U_M, 1.2, dt, dx)
    rep = dg.check_interaction_estimate(d, q, planet, C_prime=0.0, x_B=1.0)
    assert rep.weight == 0.0
    assert not rep.violated
    assert rep.slack == pytest.approx(-0.5 * C2 * dt * dx)


def test_source_off_reduces_to_classical_estimate():
    gas = euler.GasConstants(gamma=1.4, spherical=False)
    q = euler.HeatProfile()
    U_M = np.array([1.0, 1.5, 4.0])
    alpha, beta = np.array([0.0, 0.0, 0.1]), np.array([0.2, 0.0, 0.0])
    eps = np.array([0.2, 0.0, 0.1 + 0.03])
    d = dg.Diamond(alpha, beta, eps, U_M, 1.2, 1e-3, 1e-3)
    rep = dg.check_interaction_estimate(d, q, gas, C_prime=1.0)
    assert rep.base == pytest.approx(np.abs(eps).sum() - np.abs(alpha).sum() - np.abs(beta).sum())
    assert rep.weight == pytest.approx(0.02)
    assert rep.slack == pytest.approx(0.03 - 0.02)


def test_boundary_estimate_reductions():
    tri = dg.BoundaryTriangle(np.zeros(4), 0.0, np.zeros(4), 0.0, dt=1e-3)
    rep = dg.check_boundary_estimate(tri, C=1.0)
    assert rep.slack == 0.0 and not rep.violated
    # without an incoming beta_1 the estimate is |eps| <= |alpha| + C l_B
    alpha = np.array([0.1, 0.0, 0.2, 0.05])
    eps = np.array([0.1, 0.01, 0.2, 0.05])
    rep = dg.check_boundary_estimate(dg.BoundaryTriangle(alpha, 0.0, eps, 0.03), C=1.0)
    assert rep.base == pytest.approx(0.01)
    assert rep.weight == pytest.approx(0.03)
    assert rep.slack == pytest.approx(-0.02)


def test_entropy_pair_gradient_and_flux(gas, rng):
    pair = dg.EntropyPair()
    for U in random_states(rng, 200):
        grad = pair.gradient(U, gas)
        fd = central_jacobian(lambda V: np.atleast_1d(pair.eta(V, gas)), U)[0]
        np.testing.assert_allclose(grad, fd, rtol=1e-7, atol=1e-7)
        d_omega = central_jacobian(lambda V: np.atleast_1d(pair.omega(V, gas)), U)[0]
        scale = max(1.0, np.abs(d_omega).max())
        assert np.abs(d_omega - grad @ euler.jacobian(U, gas)).max() <= 1e-8 * scale


def test_entropy_is_convex(gas, rng):
    pair = dg.EntropyPair()
    for U in random_states(rng, 100):
        H = central_jacobian(lambda V: pair.gradient(V, gas), U)
        H = 0.5 * (H + H.T)
        assert np.linalg.eigvalsh(H).min() > -1e-6 * np.abs(H).max()


def _constant_run(U_left, U_right, k, n=80, steps=40, t_final=1.0):
    grid = glimm.Grid.uniform(1.0, 3.0, n)
    U = np.where(grid.centers[:, None] < 2.0, U_left, U_right)
    times = np.linspace(0.0, t_final, steps + 1)
    sols = [glimm.GridSolution(grid, t, U.copy()) for t in times]
    return grid, sols, [U_left] * steps


def test_constant_solution_has_zero_residual():
    k = euler.GasConstants(gamma=1.4, spherical=False)
    U = np.asarray(euler.conserved(1.0, 0.7, 2.0, k))
    grid, sols, bs = _constant_run(U, U, k)
    tests = dg.standard_tests(1.0, 3.0, 1.0)
    r, scale, _ = dg.weak_residual(sols, bs, tests, euler.HeatProfile(), k)
    assert np.all(r <= 1e-10 * np.maximum(scale, 1.0))


def test_stationary_contact_has_zero_residual():
    k = euler.GasConstants(gamma=1.4, spherical=False)
    UL = np.asarray(euler.conserved(1.0, 0.0, 1.0, k))
    UR = np.asarray(euler.conserved(0.3, 0.0, 1.0, k))
    grid, sols, bs = _constant_run(UL, UR, k)
    tests = dg.standard_tests(1.0, 3.0, 1.0)
    r, scale, _ = dg.weak_residual(sols, bs, tests, euler.HeatProfile(), k)
    assert np.all(r <= 1e-10 * np.maximum(scale, 1.0))
    e, escale = dg.entropy_residual(sols, bs, tests, euler.HeatProfile(), k)
    assert np.all(np.abs(e) <= 1e-10 * np.maximum(escale, 1.0))


def test_residual_requires_coverage():
    k = euler.GasConstants(gamma=1.4, spherical=False)
    U = np.asarray(euler.conserved(1.0, 0.7, 2.0, k))
    grid, sols, bs = _constant_run(U, U, k, t_final=0.5)
    with pytest.raises(ValueError):
        dg.weak_residual(sols, bs, dg.standard_tests(1.0, 3.0, 1.0), euler.HeatProfile(), k)


def test_total_variation_and_l1():
    U = np.array([[1.0, 0.0, 1.0], [2.0, 1.0, 1.0], [0.5, 1.0, 3.0]])
    per, total = dg.total_variation(U)
    np.testing.assert_allclose(per, [2.5, 1.0, 2.0])
    assert total == pytest.approx(5.5)
    assert dg.l1_distance(U, U + 0.1, 0.5) == pytest.approx(0.9)


def test_continuity_constant():
    times = np.array([0.0, 1.0, 2.0])
    states = [np.zeros((4, 3)), np.full((4, 3), 1.0), np.full((4, 3), 2.0)]
    # int |U(t2) - U(t1)| = 12 |t2 - t1| dx * 2; with dx = 0.5 that is 12 |t2 - t1|
    assert dg.continuity_constant(times, states, 0.5, 0.0) == pytest.approx(12.0)
    assert dg.continuity_constant(times, states, 0.5, 1.0) == pytest.approx(12.0 * 2.0 / 3.0)


def test_k_window_and_tv_bound():
    w = dg.k_window(C1=0.5, eps_frac=0.1, tv0=0.01, C=0.0)
    assert w.lower == 1.0 and w.upper == pytest.approx(10.0)
    assert w.K == pytest.approx(np.sqrt(10.0)) and w.inside and not w.empty
    w = dg.k_window(C1=5.0, eps_frac=0.1, tv0=0.01, C=0.0)
    assert w.empty and not w.inside
    assert dg.tv_bound(0.0, 2.0, 0.5) == pytest.approx(2.5)
    assert dg.a2_margin(3.0, 0.0, 2.0, 0.5) == pytest.approx(0.5)
