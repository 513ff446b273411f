import numpy as np
import pytest

from glimm_escape import boundary, euler
from glimm_escape.errors import NoAdmissibleSolution


def test_compatible_data_gives_trivial_fan(gas):
    U_R = np.asarray(euler.conserved(1.0, 0.8, 1.0, gas))
    fan = boundary.solve_boundary_riemann(U_R[0], U_R[1], U_R, gas)
    assert fan.pattern == "trivial"
    assert fan.tv_rho == pytest.approx(0.0, abs=1e-14)
    np.testing.assert_allclose(fan.boundary_state, U_R, rtol=1e-12)
    # the boundary 0-wave records only the energy the data do not prescribe
    assert fan.zero_wave_strength == pytest.approx(boundary.zero_wave_strength(U_R, gas), rel=1e-12)
    assert fan.zero_wave_strength > 0.0


def test_all_waves_enter_the_domain(gas):
    rng = np.random.default_rng(3)
    for _ in range(200):
        U_R = np.asarray(euler.conserved(rng.uniform(0.5, 2), rng.uniform(0.2, 3), rng.uniform(0.5, 2), gas))
        fan = boundary.solve_boundary_riemann(rng.uniform(0.5, 2), rng.uniform(0.2, 3), U_R, gas)
        assert all(w.speed_lo >= 0.0 for w in fan.base.waves)
        np.testing.assert_allclose(fan.base.right, U_R, rtol=1e-12)
        assert fan.boundary_state[0] > 0 and fan.boundary_state[1] > 0


def test_two_candidates_on_the_transition_surface(gas):
    """U_R sonic: a pure contact and a three-wave supersonic fan both connect; the least-TV one wins."""
    g = gas.gamma
    rho_R, P_R = 1.0, 1.0
    c_R = np.sqrt(g * P_R / rho_R)
    U_R = np.asarray(euler.conserved(rho_R, c_R, P_R, gas))  # u = c
    rho_B = 1.05
    m_B = rho_B * c_R  # same velocity, so a contact alone closes the problem
    fan = boundary.solve_boundary_riemann(rho_B, m_B, U_R, gas)
    assert fan.pattern == "contact"
    assert fan.tv_rho == pytest.approx(abs(rho_B - rho_R), rel=1e-12)
    # the supersonic family also has admissible members, with larger TV{rho}
    u_B = m_B / rho_B
    P_grid = rho_B * u_B**2 / g * np.logspace(-2, 0, 64)
    tv, adm, _ = boundary._supersonic_batch(rho_B, m_B, U_R, P_grid, gas)
    # the sonic end of the family (last grid point) degenerates to the contact itself
    interior = adm.copy()
    interior[-1] = False
    assert interior.sum() >= 2
    assert tv[interior].min() > fan.tv_rho
    assert tv[-1] == pytest.approx(fan.tv_rho, rel=1e-12)


def test_supersonic_pattern_selected_when_cheaper(gas):
    # fast thin inflow against a dense subsonic state: the contact closure is not admissible
    U_R = np.asarray(euler.conserved(1.0, 0.1, 1.0, gas))
    fan = boundary.solve_boundary_riemann(0.3, 0.3 * 3.5, U_R, gas)
    assert fan.pattern in ("1+contact+3", "contact+3", "3-wave")
    assert all(w.speed_lo >= 0.0 for w in fan.base.waves)
    if fan.pattern == "1+contact+3":
        w1 = fan.base.waves[0]
        assert not (w1.kind == "shock" and w1.speed_lo == 0.0)


def test_tv_continuous_in_boundary_data(gas):
    U_R = np.asarray(euler.conserved(0.9, 2.2, 3.4, gas))
    base = boundary.solve_boundary_riemann(1.0, 2.2, U_R, gas).tv_rho
    for d in (1e-3, 1e-4, 1e-5):
        tv = boundary.solve_boundary_riemann(1.0 + d, 2.2 * (1 + d), U_R, gas).tv_rho
        assert abs(tv - base) <= 20.0 * d


def test_bad_data(gas):
    U_R = np.asarray(euler.conserved(1.0, 1.0, 1.0, gas))
    with pytest.raises(ValueError):
        boundary.solve_boundary_riemann(-1.0, 1.0, U_R, gas)
    with pytest.raises(ValueError):
        boundary.solve_boundary_riemann(1.0, 0.0, U_R, gas)
    assert issubclass(NoAdmissibleSolution, Exception)
