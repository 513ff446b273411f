"""Boundary-Riemann problem at the inner radius.

Only (rho_B, m_B) are prescribed at x_B; the boundary energy E_B is part of
the solution.  Candidate self-similar solutions are those whose waves all
move into the domain (speed >= 0).  Among them the one with the least total
variation in density is selected, ties going to the pattern with fewer
waves.

Candidate families:

* ``contact+3``: no 1-wave.  The boundary state has the prescribed velocity
  and lies on the 3-wave curve through U_R after a contact.  E_B is fixed by
  matching pressure; degenerate members are reported as ``contact`` or
  ``3-wave`` when one of the two waves has zero strength.
* ``1+contact+3``: a supersonic boundary state emitting a 1-wave that still
  moves right.  This is a one-parameter family in E_B, parametrised by
  P_B up to the sonic value rho_B u_B^2/gamma.  It is scanned on a log grid
  and the best grid point is refined by repeated zooming.  A 1-shock
  standing at exactly zero speed is not admissible; a sonic boundary state
  whose 1-rarefaction starts at speed zero is.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import euler
from .errors import NoAdmissibleSolution
from .riemann import (
    CONTACT,
    RAREFACTION,
    SHOCK,
    Side,
    Wave,
    WaveFan,
    side_function,
    solve_increasing,
    solve_riemann,
    solve_star,
)

ZERO_STRENGTH = 1e-12
SCAN_POINTS = 48
SCAN_DECADES = 4.0
ZOOM_LEVELS = 6


@dataclass(frozen=True)
class Candidate:
    pattern: str
    E_B: float
    tv_rho: float
    n_waves: int
    admissible: bool
    note: str = ""


@dataclass(frozen=True)
class BoundaryFan:
    base: WaveFan
    boundary_state: euler.ConservedState
    zero_wave_strength: float
    pattern: str
    candidates: tuple = field(default=(), compare=False)

    @property
    def E_B(self):
        return self.boundary_state.E

    @property
    def tv_rho(self):
        return self.base.total_variation_rho()

    def sample(self, xi):
        return self.base.sample(xi)

    @property
    def max_speed(self):
        return self.base.max_speed


def zero_wave_strength(U_B, k):
    """|R^{-1}(U_B) (U_B - (rho_B, m_B, 0))|, summed over components."""
    Lm = euler.left_eigenvectors(U_B, k)
    return float(np.abs(Lm @ np.array([0.0, 0.0, U_B[2]])).sum())


def _same(a, b):
    return abs(a - b) <= ZERO_STRENGTH * max(abs(a), abs(b))


def _contact_closure(rho_B, m_B, U_R, k):
    """Boundary state with no 1-wave; returns (fan, pattern) or None."""
    g = k.gamma
    R = Side.from_conserved(np.atleast_2d(U_R), k)
    u_B = m_B / rho_B
    target = u_B - R.u[0]
    if target <= -2.0 * R.c[0] / (g - 1.0):
        return None  # the 3-rarefaction would have to reach vacuum
    p0 = np.array([R.P[0]])
    p, _ = solve_increasing(lambda p: side_function(p, R, g), target, p0, what="boundary pressure")
    p = float(p[0])
    E_B = p / (g - 1.0) + 0.5 * m_B * u_B
    U_B = euler.ConservedState(float(rho_B), float(m_B), float(E_B))
    UR = euler.ConservedState(*map(float, R.U[0]))
    pr = p / R.P[0]
    g6 = (g - 1.0) / (g + 1.0)
    z = (g - 1.0) / (2.0 * g)
    if p > R.P[0]:
        rho2 = R.rho[0] * (pr + g6) / (g6 * pr + 1.0)
        s = R.u[0] + R.c[0] * np.sqrt((g + 1.0) / (2.0 * g) * pr + z)
        w3 = Wave(3, SHOCK, float(s), float(s))
    else:
        rho2 = R.rho[0] * pr ** (1.0 / g)
        c2 = R.c[0] * pr**z
        w3 = Wave(3, RAREFACTION, float(u_B + c2), float(R.u[0] + R.c[0]))
    U2 = euler.ConservedState(float(rho2), float(rho2 * u_B), float(p / (g - 1.0) + 0.5 * rho2 * u_B * u_B))
    contact_zero = _same(rho_B, rho2)
    three_zero = _same(p, R.P[0])
    wc = Wave(2, CONTACT, u_B, u_B)
    if contact_zero and three_zero:
        fan, pattern = WaveFan((U_B, UR), (), g), "trivial"
    elif contact_zero:
        fan, pattern = WaveFan((U_B, UR), (w3,), g), "3-wave"
    elif three_zero:
        fan, pattern = WaveFan((U_B, UR), (wc,), g), "contact"
    else:
        fan, pattern = WaveFan((U_B, U2, UR), (wc, w3), g), "contact+3"
    return fan, pattern


def _supersonic_batch(rho_B, m_B, U_R, P_B, k):
    """Riemann problems from supersonic boundary states; returns (tv, admissible, star)."""
    g = k.gamma
    u_B = m_B / rho_B
    n = P_B.size
    UB = np.stack([np.full(n, rho_B), np.full(n, m_B), P_B / (g - 1.0) + 0.5 * m_B * u_B], axis=-1)
    UR = np.broadcast_to(np.asarray(U_R, dtype=float), (n, 3))
    L = Side.from_conserved(UB, k)
    R = Side.from_conserved(UR, k)
    ok = 2.0 * (L.c + R.c) / (g - 1.0) > R.u - L.u
    tv = np.full(n, np.inf)
    adm = np.zeros(n, dtype=bool)
    if not ok.any():
        return tv, adm, None
    Lk = Side(*(a[ok] for a in L))
    Rk = Side(*(a[ok] for a in R))
    star = solve_star(None, None, k, left=Lk, right=Rk)
    scale = np.abs(Lk.u) + Lk.c
    # rarefaction: head speed u_B - c_B >= 0; shock: strictly positive speed
    moving = np.where(star.shock_l, star.lo1 > ZERO_STRENGTH * scale, star.lo1 >= -ZERO_STRENGTH * scale)
    tv_ok = (
        np.abs(Lk.rho - star.rho_l) + np.abs(star.rho_l - star.rho_r) + np.abs(star.rho_r - Rk.rho)
    )
    tv[ok] = np.where(moving, tv_ok, np.inf)
    adm[ok] = moving
    return tv, adm, star


def _supersonic_fan(rho_B, m_B, U_R, P_B, k):
    g = k.gamma
    U_B = euler.ConservedState(float(rho_B), float(m_B), float(P_B / (g - 1.0) + 0.5 * m_B * m_B / rho_B))
    fan = solve_riemann(U_B, U_R, k)
    w1 = fan.waves[0]
    scale = abs(m_B / rho_B) + float(euler.sound_speed(np.asarray(U_B), k))
    if w1.kind == RAREFACTION and -ZERO_STRENGTH * scale <= w1.speed_lo < 0.0:
        # sonic boundary state: the head speed u_B - c_B is zero up to rounding
        head = Wave(1, RAREFACTION, 0.0, w1.speed_hi)
        fan = WaveFan(fan.states, (head,) + fan.waves[1:], fan.gamma)
    return fan, U_B


def solve_boundary_riemann(rho_B, m_B, U_R, k):
    """Least-TV{rho} admissible solution of the boundary-Riemann problem."""
    if not (rho_B > 0.0 and m_B > 0.0):
        raise ValueError("boundary data needs rho_B > 0 and m_B > 0")
    U_R = euler.ConservedState(*map(float, euler.check_states(np.asarray(U_R, dtype=float))))
    g = k.gamma
    rho_R = U_R[0]
    candidates = []
    best = None  # (tv, n_waves, fan, pattern)

    closure = _contact_closure(rho_B, m_B, U_R, k)
    if closure is not None:
        fan, pattern = closure
        ok = all(w.speed_lo >= 0.0 for w in fan.waves)
        tv = fan.total_variation_rho()
        candidates.append(Candidate(pattern, fan.states[0][2], tv, len(fan.waves), ok))
        if ok:
            best = (tv, len(fan.waves), fan, pattern)

    # Any candidate has TV >= |rho_B - rho_R|; if the closure attains that
    # bound, the three-wave family can at best tie and would lose the tie.
    lower = abs(rho_B - rho_R)
    if best is None or best[0] > lower * (1.0 + 1e-12) + 1e-15:
        u_B = m_B / rho_B
        P_sonic = rho_B * u_B * u_B / g
        grid = P_sonic * np.logspace(-SCAN_DECADES, 0.0, SCAN_POINTS)
        grid[-1] = P_sonic
        tv, adm, _ = _supersonic_batch(rho_B, m_B, U_R, grid, k)
        for P, t_, a in zip(grid, tv, adm):
            candidates.append(
                Candidate("1+contact+3", P / (g - 1.0) + 0.5 * m_B * u_B, float(t_), 3, bool(a), "scan")
            )
        if adm.any():
            i = int(np.argmin(tv))
            P_best, tv_best = grid[i], tv[i]
            for _ in range(ZOOM_LEVELS):
                lo_p, hi_p = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
                grid = np.geomspace(lo_p, hi_p, SCAN_POINTS)
                tv, adm, _ = _supersonic_batch(rho_B, m_B, U_R, grid, k)
                i = int(np.argmin(tv))
                if tv[i] < tv_best:
                    P_best, tv_best = grid[i], tv[i]
            fan, U_B = _supersonic_fan(rho_B, m_B, U_R, P_best, k)
            candidates.append(Candidate("1+contact+3", U_B[2], float(tv_best), 3, True, "refined"))
            tie = best is not None and abs(tv_best - best[0]) <= 1e-12 * max(1.0, best[0])
            if best is None or (tv_best < best[0] and not tie):
                best = (float(tv_best), 3, fan, "1+contact+3")
    else:
        candidates.append(Candidate("1+contact+3", float("nan"), float("inf"), 3, False, "skipped: lower bound attained"))

    if best is None:
        raise NoAdmissibleSolution("no admissible boundary wave pattern")
    _, _, fan, pattern = best
    U_B = fan.states[0]
    return BoundaryFan(fan, U_B, zero_wave_strength(U_B, k), pattern, tuple(candidates))
