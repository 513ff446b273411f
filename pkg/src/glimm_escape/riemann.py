"""Exact Riemann solver for the homogeneous ideal-gas Euler equations.

Two layers live here.  ``solve_star`` / ``sample_star`` work on arrays of
Riemann problems at once and are what the time stepper calls.  ``WaveFan``
and ``solve_riemann`` wrap a single problem as an explicit list of states and
waves, which is easier to inspect and test.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import euler
from .errors import NoConvergence, Vacuum

MAX_ITER = 100
REL_TOL = 1e-12


class Side(NamedTuple):
    """Primitive data of one side of a batch of Riemann problems."""

    rho: np.ndarray
    u: np.ndarray
    P: np.ndarray
    c: np.ndarray
    U: np.ndarray  # conserved, shape (n, 3); returned verbatim by sampling

    @classmethod
    def from_conserved(cls, U, k):
        U = euler.check_states(np.atleast_2d(np.asarray(U, dtype=float)))
        rho = U[:, 0]
        u = U[:, 1] / rho
        P = euler.pressure(U, k)
        c = np.sqrt(k.gamma * P / rho)
        return cls(rho, u, P, c, U)


class StarSolution(NamedTuple):
    left: Side
    right: Side
    p: np.ndarray
    u: np.ndarray
    rho_l: np.ndarray  # density between the 1-wave and the contact
    rho_r: np.ndarray  # density between the contact and the 3-wave
    shock_l: np.ndarray
    shock_r: np.ndarray
    # wave edges: 1-wave occupies [lo1, hi1], 3-wave [lo3, hi3]
    lo1: np.ndarray
    hi1: np.ndarray
    lo3: np.ndarray
    hi3: np.ndarray
    iterations: int

    @property
    def max_speed(self):
        return float(np.max(np.abs(np.concatenate([self.lo1, self.hi3, self.u]))))


def side_function(p, side, gamma):
    """Velocity change across the wave connecting ``side`` to pressure p.

    Returns (f, df/dp); shock branch for p > P, rarefaction branch otherwise.
    """
    rho, P, c = side.rho, side.P, side.c
    g = gamma
    A = 2.0 / ((g + 1.0) * rho)
    B = (g - 1.0) / (g + 1.0) * P
    shock = p > P
    ps = np.where(shock, p, P)  # keep both branches finite
    sq = np.sqrt(A / (ps + B))
    f_s = (ps - P) * sq
    df_s = sq * (1.0 - 0.5 * (ps - P) / (ps + B))
    pr = np.where(shock, P, np.maximum(p, 0.0)) / P
    z = (g - 1.0) / (2.0 * g)
    f_r = 2.0 * c / (g - 1.0) * (pr**z - 1.0)
    with np.errstate(divide="ignore"):
        df_r = 1.0 / (rho * c) * pr ** (-(g + 1.0) / (2.0 * g))
    return np.where(shock, f_s, f_r), np.where(shock, df_s, df_r)


def solve_increasing(func, target, p0, *, what="star pressure"):
    """Root of func(p) = target for increasing, concave func on p > 0.

    Newton iterates from the left of the root increase monotonically; an
    iterate that leaves the current bracket is replaced by bisection.
    """
    p = np.array(p0, dtype=float)
    lo = np.zeros_like(p)
    hi = np.full_like(p, np.inf)
    active = np.ones(p.shape, dtype=bool)
    for it in range(1, MAX_ITER + 1):
        F, dF = func(p)
        F = F - target
        lo = np.where(active & (F < 0.0), p, lo)
        hi = np.where(active & (F > 0.0), p, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            p_new = p - F / dF
        done = (np.abs(p_new - p) <= REL_TOL * np.abs(p_new)) | (F == 0.0)
        outside = ~done & (~(p_new > lo) | ~(p_new < hi))
        p_new = np.where(outside & np.isfinite(hi), 0.5 * (lo + hi), p_new)
        p_new = np.where(outside & ~np.isfinite(hi), 2.0 * p, p_new)
        p = np.where(active & (F != 0.0), p_new, p)
        active &= ~done
        if not active.any():
            return p, it
    bad = np.flatnonzero(active)
    raise NoConvergence(f"{what} iteration did not converge in {MAX_ITER} steps", cell=int(bad[0]))


def solve_star(UL, UR, k, *, left=None, right=None):
    """Star pressure and velocity for a batch of Riemann problems."""
    g = k.gamma
    L = left if left is not None else Side.from_conserved(UL, k)
    R = right if right is not None else Side.from_conserved(UR, k)
    du = R.u - L.u
    vac = 2.0 * (L.c + R.c) / (g - 1.0) <= du
    if np.any(vac):
        raise Vacuum("Riemann data generates vacuum", cell=int(np.flatnonzero(vac)[0]))
    z = (g - 1.0) / (2.0 * g)
    # two-rarefaction estimate: exact when both waves are rarefactions
    guess = ((L.c + R.c - 0.5 * (g - 1.0) * du) / (L.c / L.P**z + R.c / R.P**z)) ** (1.0 / z)

    def F(p):
        fl, dl = side_function(p, L, g)
        fr, dr = side_function(p, R, g)
        return fl + fr, dl + dr

    p, iters = solve_increasing(F, -du, guess)
    fl, _ = side_function(p, L, g)
    fr, _ = side_function(p, R, g)
    u = 0.5 * (L.u + R.u) + 0.5 * (fr - fl)
    return _assemble(L, R, p, u, g, iters)


def _assemble(L, R, p, u, g, iters):
    g6 = (g - 1.0) / (g + 1.0)
    z = (g - 1.0) / (2.0 * g)
    shock_l = p > L.P
    shock_r = p > R.P
    pl, pr = p / L.P, p / R.P
    rho_l = np.where(shock_l, L.rho * (pl + g6) / (g6 * pl + 1.0), L.rho * pl ** (1.0 / g))
    rho_r = np.where(shock_r, R.rho * (pr + g6) / (g6 * pr + 1.0), R.rho * pr ** (1.0 / g))
    s_l = L.u - L.c * np.sqrt((g + 1.0) / (2.0 * g) * pl + z)
    s_r = R.u + R.c * np.sqrt((g + 1.0) / (2.0 * g) * pr + z)
    c_l = L.c * pl**z
    c_r = R.c * pr**z
    lo1 = np.where(shock_l, s_l, L.u - L.c)
    hi1 = np.where(shock_l, s_l, u - c_l)
    lo3 = np.where(shock_r, s_r, u + c_r)
    hi3 = np.where(shock_r, s_r, R.u + R.c)
    return StarSolution(L, R, p, u, rho_l, rho_r, shock_l, shock_r, lo1, hi1, lo3, hi3, iters)


def sample_star(star, xi, k):
    """Conserved state at similarity coordinate xi for every problem."""
    g = k.gamma
    L, R = star.left, star.right
    xi = np.broadcast_to(np.asarray(xi, dtype=float), star.p.shape)
    gm = g - 1.0
    gp = g + 1.0

    # left rarefaction interior
    cf = 2.0 / gp * (L.c + 0.5 * gm * (L.u - xi))
    cf = np.maximum(cf, 0.0)
    uf_l = 2.0 / gp * (L.c + 0.5 * gm * L.u + xi)
    rf_l = L.rho * (cf / L.c) ** (2.0 / gm)
    pf_l = L.P * (cf / L.c) ** (2.0 * g / gm)
    # right rarefaction interior
    cr = 2.0 / gp * (R.c - 0.5 * gm * (R.u - xi))
    cr = np.maximum(cr, 0.0)
    uf_r = 2.0 / gp * (-R.c + 0.5 * gm * R.u + xi)
    rf_r = R.rho * (cr / R.c) ** (2.0 / gm)
    pf_r = R.P * (cr / R.c) ** (2.0 * g / gm)

    left_side = xi <= star.u
    rho = np.where(left_side, star.rho_l, star.rho_r)
    u = star.u.copy()
    p = star.p.copy()
    in_fan_l = left_side & ~star.shock_l & (xi > star.lo1) & (xi < star.hi1)
    in_fan_r = ~left_side & ~star.shock_r & (xi > star.lo3) & (xi < star.hi3)
    rho = np.where(in_fan_l, rf_l, np.where(in_fan_r, rf_r, rho))
    u = np.where(in_fan_l, uf_l, np.where(in_fan_r, uf_r, u))
    p = np.where(in_fan_l, pf_l, np.where(in_fan_r, pf_r, p))
    out = np.stack([rho, rho * u, p / gm + 0.5 * rho * u * u], axis=-1)

    outer_l = left_side & (xi <= star.lo1)
    outer_r = ~left_side & ((xi > star.hi3) | (~star.shock_r & (xi >= star.hi3)))
    out = np.where(outer_l[:, None], L.U, out)
    out = np.where(outer_r[:, None], R.U, out)
    return out


# ---------------------------------------------------------------------------
# single-problem interface

SHOCK, RAREFACTION, CONTACT = "shock", "rarefaction", "contact"


@dataclass(frozen=True)
class Wave:
    family: int
    kind: str
    speed_lo: float
    speed_hi: float

    @property
    def speed(self):
        """Propagation speed of a discontinuity; midpoint for a rarefaction."""
        return 0.5 * (self.speed_lo + self.speed_hi)


@dataclass(frozen=True)
class WaveFan:
    """Constant states separated by waves, ordered left to right."""

    states: tuple
    waves: tuple
    gamma: float

    @property
    def left(self):
        return self.states[0]

    @property
    def right(self):
        return self.states[-1]

    def sample(self, xi):
        return sample_fan(self, xi)

    def total_variation_rho(self):
        rho = [s[0] for s in self.states]
        return float(sum(abs(b - a) for a, b in zip(rho, rho[1:])))

    @property
    def max_speed(self):
        if not self.waves:
            return 0.0
        return max(max(abs(w.speed_lo), abs(w.speed_hi)) for w in self.waves)


def _prim(U, gamma):
    rho, m, E = U
    u = m / rho
    P = (gamma - 1.0) * (E - 0.5 * m * u)
    return rho, u, P, np.sqrt(gamma * P / rho)


def _rarefaction_state(family, U_side, xi, gamma):
    rho, u, P, c = _prim(U_side, gamma)
    g, gm, gp = gamma, gamma - 1.0, gamma + 1.0
    if family == 1:
        cf = 2.0 / gp * (c + 0.5 * gm * (u - xi))
        uf = 2.0 / gp * (c + 0.5 * gm * u + xi)
    else:
        cf = 2.0 / gp * (c - 0.5 * gm * (u - xi))
        uf = 2.0 / gp * (-c + 0.5 * gm * u + xi)
    rf = rho * (cf / c) ** (2.0 / gm)
    pf = P * (cf / c) ** (2.0 * g / gm)
    return euler.ConservedState(float(rf), float(rf * uf), float(pf / gm + 0.5 * rf * uf * uf))


def sample_fan(fan, xi):
    """Self-similar solution at xi; a point on a discontinuity takes its left state."""
    for i, w in enumerate(fan.waves):
        if xi <= w.speed_lo:
            return fan.states[i]
        if w.kind == RAREFACTION and xi < w.speed_hi:
            side = fan.states[i] if w.family == 1 else fan.states[i + 1]
            return _rarefaction_state(w.family, side, xi, fan.gamma)
    return fan.states[-1]


def fan_from_star(star, i, k):
    """WaveFan for problem i of a StarSolution."""
    g = k.gamma
    L, R = star.left, star.right
    u, p = float(star.u[i]), float(star.p[i])
    s_l = euler.ConservedState(*map(float, euler.to_conserved((star.rho_l[i], u, p), k)))
    s_r = euler.ConservedState(*map(float, euler.to_conserved((star.rho_r[i], u, p), k)))
    waves = (
        Wave(1, SHOCK if star.shock_l[i] else RAREFACTION, float(star.lo1[i]), float(star.hi1[i])),
        Wave(2, CONTACT, u, u),
        Wave(3, SHOCK if star.shock_r[i] else RAREFACTION, float(star.lo3[i]), float(star.hi3[i])),
    )
    states = (
        euler.ConservedState(*map(float, L.U[i])),
        s_l,
        s_r,
        euler.ConservedState(*map(float, R.U[i])),
    )
    return WaveFan(states, waves, g)


def solve_riemann(U_L, U_R, k):
    """Exact solution of the Riemann problem with data U_L | U_R."""
    star = solve_star(np.atleast_2d(U_L), np.atleast_2d(U_R), k)
    return fan_from_star(star, 0, k)
