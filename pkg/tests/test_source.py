import numpy as np
import pytest

from glimm_escape import euler, riemann, source
from conftest import random_states
from oracles import frozen_linear_response, source_ode

Q = euler.HeatProfile("gaussian_bump", (2.0, 1.25, 0.2))


@pytest.fixture
def k():
    return euler.GasConstants(gamma=1.4, G_Mp=0.5)


def test_identity_at_zero_time(k, rng):
    for U in random_states(rng, 100, u_range=(0.0, 3.0)):
        S = source.contraction(1.2, 0.0, U, Q, k)
        assert np.array_equal(S.entries, np.eye(3))
        assert source.apply(U, S) == tuple(U)


def test_phi1():
    z = np.array([-1e-12, 0.0, 1e-12, 0.5, -3.0])
    ref = np.where(z == 0, 1.0, np.expm1(z) / np.where(z == 0, 1.0, z))
    np.testing.assert_allclose(source.phi1(z), ref, rtol=1e-15)
    assert float(source.phi1(1e-300)) == 1.0


def test_first_order_slope(k):
    """(S - I)U - dt h g = O(dt^2): log-log slope 2 over dt = 1e-2 .. 1e-6 x_B."""
    x_B = 1.0
    U = np.array([1.0, 2.2, 9.2])
    dts = x_B * np.logspace(-2, -6, 9)
    err = [np.abs(source.perturbation(1.1, dt, U, Q, k) - source.first_order_perturbation(1.1, dt, U, Q, k)).max()
           for dt in dts]
    slope = np.polyfit(np.log(dts), np.log(err), 1)[0]
    assert 1.9 <= slope <= 2.1
    ratios = np.log2(np.array(err[:-1]) / np.array(err[1:])) / np.log2(dts[0] / dts[1])
    assert np.all((ratios > 1.9) & (ratios < 2.1))


def test_first_order_is_source(k, rng):
    for U in random_states(rng, 20, u_range=(0.1, 3.0)):
        np.testing.assert_allclose(source.first_order_perturbation(1.3, 1e-3, U, Q, k),
                                   1e-3 * euler.source(1.3, U, Q, k), rtol=1e-12, atol=1e-15)


def test_contraction_matches_transition_matrix(k, rng):
    for U in random_states(rng, 200, u_range=(0.1, 3.0)):
        for dt in (1e-5, 1e-3, 1e-1):
            a = source.perturbation(1.1, dt, U, Q, k)
            b = source.perturbation_via_transition_matrix(1.1, dt, U, Q, k)
            assert np.abs(a - b).max() <= 1e-10 * max(1.0, np.abs(U).max())


def test_expm_oracle(k, rng):
    for U in random_states(rng, 50, u_range=(0.1, 3.0)):
        x, dt = 1.2, 1e-2
        ref = frozen_linear_response(x, dt, U, k.gamma, k.G_Mp, float(Q(x)))
        np.testing.assert_allclose(source.perturbation(x, dt, U, Q, k), ref, rtol=1e-7, atol=1e-9)


def test_close_to_nonlinear_ode(k):
    U = np.array([1.0, 2.2, 9.2])
    for dt in (1e-3, 1e-4):
        err = np.abs(U + source.perturbation(1.1, dt, U, Q, k) - source_ode(1.1, dt, U, k.gamma, k.G_Mp, float(Q(1.1))))
        assert err.max() < 50.0 * dt**2


def test_resonance_is_smooth(k):
    """v = (gamma - 1) u: the closed form has a removable singularity there."""
    x = 1.0
    v = np.sqrt(k.G_Mp / (2 * x))
    u = v / (k.gamma - 1.0)
    U = np.asarray(euler.conserved(1.0, u, 1.0, k))
    a = source.perturbation(x, 1e-2, U, Q, k)
    U2 = np.asarray(euler.conserved(1.0, u * (1 + 1e-7), 1.0, k))
    b = source.perturbation(x, 1e-2, U2, Q, k)
    assert np.all(np.isfinite(a))
    np.testing.assert_allclose(a, b, rtol=1e-5)


def test_pure_geometric_limit():
    k0 = euler.GasConstants(gamma=1.4, G_Mp=0.0)
    U = np.array([1.0, 0.5, 2.0])
    S = source.contraction(1.3, 0.1, U, euler.HeatProfile(), k0)
    assert S.entries[1, 0] == 0.0
    assert S.entries[0, 0] == pytest.approx(np.exp(-2 / 1.3 * 0.5 * 0.1), rel=1e-14)


def test_density_row_positive(k, rng):
    for U in random_states(rng, 500, u_range=(0.0, 5.0)):
        S = source.contraction(1.0, 0.05, U, Q, k)
        assert S.entries[0, 0] > 0.0


def test_perturbation_linear_in_dt(k, rng):
    Us = random_states(rng, 300, u_range=(0.0, 3.0))
    ratio = []
    for dt in (1e-4, 1e-5):
        d = np.abs(source.perturbation(1.1, dt, Us, Q, k)).max(axis=1)
        ratio.append(d.max() / dt)
    assert ratio[1] == pytest.approx(ratio[0], rel=1e-2)


def test_transition_small_dt_limit(k):
    U = np.array([1.0, 1.5, 5.0])
    dt = 1e-8
    np.testing.assert_allclose(source.perturbation_via_transition_matrix(1.2, dt, U, Q, k) / dt,
                               euler.source(1.2, U, Q, k), rtol=1e-6)


def test_zero_forcing():
    k0 = euler.GasConstants(gamma=1.4, G_Mp=1e-30)
    U = np.array([1.0, 0.0, 2.0])
    np.testing.assert_allclose(source.perturbation(1.0, 0.1, U, euler.HeatProfile(), k0), 0.0, atol=1e-25)


def test_time_average():
    assert source.time_average(np.full(5, 3.0)) == 3.0
    vals = 2.0 + 3.0 * np.linspace(0.0, 1.0, 17)
    assert source.time_average(vals) == pytest.approx(3.5, abs=1e-12)


def test_averaged_state_across_contact(gas):
    fan = riemann.solve_riemann(np.asarray(euler.conserved(1.0, 0.5, 1.0, gas)),
                                np.asarray(euler.conserved(0.5, 0.5, 1.0, gas)), gas)
    avg = source.averaged_state(fan, 0.01, 0.05)
    assert 0.5 <= avg[0] <= 1.0
    const = source.averaged_state(riemann.solve_riemann(fan.left, fan.left, gas), 0.01, 0.05)
    np.testing.assert_allclose(const, fan.left, rtol=1e-14)


def test_rejects_bad_arguments(k):
    with pytest.raises(ValueError):
        source.contraction(-1.0, 0.1, np.array([1.0, 0.0, 1.0]), Q, k)
    with pytest.raises(ValueError):
        source.contraction(1.0, -0.1, np.array([1.0, 0.0, 1.0]), Q, k)
