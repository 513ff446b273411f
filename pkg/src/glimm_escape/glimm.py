"""Non-staggered random-choice (Glimm) time stepping with source coupling.

Grid layout.  Nodes are x_i = x_B + i*dx.  Cell j covers [x_{2j}, x_{2j+2}]
with centre x_{2j+1}, so a cell is 2*dx wide and dx is the half-width used
in the CFL ratio dx/dt.  Riemann problems sit at the even nodes: node 0 is
the boundary-Riemann problem fed by (rho_B(t_n), m_B(t_n)) and W_0; node 2j
(j >= 1) separates W_{j-1} and W_j.  The last cell is closed by zeroth-order
extrapolation, so no wave enters from the right.

One step: solve all fans from W^n, choose dt from their speeds, pick
theta in (-1, 1), sample each fan at x_{2j+1} + theta*dx at time dt, then
correct the sample with the source.  Three couplings are available:

* ``contraction``: U = S(x, dt, U~) U~ at the sample point (the scheme);
* ``classical``: U = U~ (homogeneous Glimm);
* ``splitting``: one RK4 step of U' = h(x) g(x, U) from U~ (oracle).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import euler, source
from .boundary import BoundaryFan, solve_boundary_riemann
from .errors import CFLCollapse, PositivityViolation, SolverError, StateInvalid
from .riemann import Side, StarSolution, sample_star, solve_star

COUPLINGS = ("contraction", "classical", "splitting")
DT_FLOOR = 1e-14


@dataclass(frozen=True)
class Grid:
    x_B: float
    dx: float
    n_cells: int

    def __post_init__(self):
        if not (self.x_B > 0.0 and self.dx > 0.0 and self.n_cells >= 1):
            raise ValueError("grid needs x_B > 0, dx > 0 and at least one cell")

    @classmethod
    def uniform(cls, x_B, x_max, n_cells):
        if not x_max > x_B:
            raise ValueError("x_max must exceed x_B")
        return cls(float(x_B), (x_max - x_B) / (2.0 * n_cells), int(n_cells))

    @property
    def x_max(self):
        return self.x_B + 2.0 * self.n_cells * self.dx

    @property
    def centers(self):
        return self.x_B + (2.0 * np.arange(self.n_cells) + 1.0) * self.dx

    @property
    def interfaces(self):
        """Even nodes x_B, x_2, ..., x_{2N}."""
        return self.x_B + 2.0 * np.arange(self.n_cells + 1) * self.dx

    def refine(self, factor=2):
        return Grid(self.x_B, self.dx / factor, self.n_cells * factor)


def van_der_corput(n, base=2):
    """Radical inverse of the integer n >= 1."""
    q, denom = 0.0, 1.0
    while n:
        n, r = divmod(n, base)
        denom *= base
        q += r / denom
    return q


@dataclass(frozen=True)
class RandomSequence:
    """theta_n in (-1, 1), addressable by index so runs can be restarted."""

    kind: str = "van_der_corput"
    seed: int = 0
    base: int = 2  # van der Corput radix

    def __post_init__(self):
        if self.kind not in ("van_der_corput", "seeded_uniform"):
            raise ValueError(f"unknown sequence kind {self.kind!r}")
        if self.base < 2:
            raise ValueError("van der Corput base must be at least 2")

    def __call__(self, n):
        if self.kind == "van_der_corput":
            return 2.0 * van_der_corput(n + 1, self.base) - 1.0
        rng = np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(n,)))
        while True:
            th = rng.uniform(-1.0, 1.0)
            if th > -1.0:
                return float(th)


@dataclass(frozen=True)
class BoundaryData:
    """Inner-boundary density and momentum as functions of time.

    ``modulated``: rho0 (1 + a_rho sin(2 pi t / period)),
                   m0 (1 + a_m sin(2 pi t / period + phase)).
    ``tabulated``: piecewise-linear in t, held constant past the ends.
    """

    kind: str = "modulated"
    rho0: float = 1.0
    m0: float = 1.0
    amp_rho: float = 0.0
    amp_m: float = 0.0
    period: float = 1.0
    phase: float = 0.0
    table: tuple = ()  # (times, rhos, ms) for kind "tabulated"

    def __post_init__(self):
        if self.kind == "modulated":
            if self.rho0 <= 0.0 or self.m0 < 0.0 or abs(self.amp_rho) >= 1.0 or abs(self.amp_m) > 1.0:
                raise ValueError("modulated boundary data must stay positive")
            if self.period <= 0.0:
                raise ValueError("period must be positive")
        elif self.kind == "tabulated":
            ts, rs, ms = (np.asarray(a, dtype=float) for a in self.table)
            if not (ts.size == rs.size == ms.size and ts.size >= 1 and np.all(np.diff(ts) > 0)):
                raise ValueError("tabulated boundary data needs increasing times and matching lengths")
            if np.any(rs <= 0.0) or np.any(ms < 0.0):
                raise ValueError("tabulated boundary density must be positive")
        else:
            raise ValueError(f"unknown boundary data kind {self.kind!r}")

    def __call__(self, t):
        if self.kind == "modulated":
            w = 2.0 * np.pi * t / self.period
            return (
                self.rho0 * (1.0 + self.amp_rho * np.sin(w)),
                self.m0 * (1.0 + self.amp_m * np.sin(w + self.phase)),
            )
        ts, rs, ms = self.table
        return float(np.interp(t, ts, rs)), float(np.interp(t, ts, ms))

    def bounds(self):
        """(min rho, max rho, min m, max m) over all times."""
        if self.kind == "modulated":
            a, b = abs(self.amp_rho), abs(self.amp_m)
            return self.rho0 * (1 - a), self.rho0 * (1 + a), self.m0 * (1 - b), self.m0 * (1 + b)
        _, rs, ms = self.table
        return min(rs), max(rs), min(ms), max(ms)


@dataclass(frozen=True)
class GridSolution:
    grid: Grid
    time: float
    states: np.ndarray
    theta_index: int = 0
    dt_used: float = 0.0
    step: int = 0

    @property
    def x(self):
        return self.grid.centers

    def min_velocity(self):
        return float(np.min(self.states[:, 1] / self.states[:, 0]))

    def min_density(self):
        return float(np.min(self.states[:, 0]))


@dataclass
class StepRecord:
    """Everything one step produced; diagnostics are computed from this."""

    before: GridSolution
    after: GridSolution
    theta: float
    dt: float
    boundary_input: tuple  # (rho_B, m_B) at t_n
    boundary_fan: BoundaryFan
    star: StarSolution | None  # interior fans at t_n (None for one cell)
    sampled: np.ndarray  # homogeneous samples U~
    x_sample: np.ndarray
    max_speed: float
    extra: dict = field(default_factory=dict)


def cfl_dt(sol, k, safety):
    """safety * dx / max(|u| + c) over the cells."""
    U = sol.states
    s = np.max(np.abs(euler.velocity(U)) + euler.sound_speed(U, k))
    return safety * sol.grid.dx / s


def solve_fans(sol, bdry, k):
    """Boundary fan and interior star solutions built from sol.states."""
    W = sol.states
    rho_B, m_B = bdry(sol.time)
    try:
        bfan = solve_boundary_riemann(rho_B, m_B, W[0], k)
    except SolverError as e:
        e.time = sol.time
        raise
    star = None
    if W.shape[0] > 1:
        try:
            star = solve_star(W[:-1], W[1:], k)
        except SolverError as e:
            e.time = sol.time
            if e.cell is not None:
                e.cell += 1  # report the node index 2k as k
            raise
    return (rho_B, m_B), bfan, star


def fan_speed(bfan, star, k):
    """Bound on |wave speed| and on |u| + c over every state the fans contain."""
    speeds = [bfan.max_speed]
    for U in bfan.base.states:
        speeds.append(abs(U[1] / U[0]) + float(euler.sound_speed(np.asarray(U), k)))
    if star is not None:
        g = k.gamma
        c_l = np.sqrt(g * star.p / star.rho_l)
        c_r = np.sqrt(g * star.p / star.rho_r)
        au = np.abs(star.u)
        speeds += [
            np.max(np.abs(star.lo1)),
            np.max(np.abs(star.hi3)),
            np.max(au + c_l),
            np.max(au + c_r),
            np.max(np.abs(star.left.u) + star.left.c),
            np.max(np.abs(star.right.u) + star.right.c),
        ]
    return float(max(speeds))


def sample_cells(sol, bfan, star, theta, dt, k):
    """Homogeneous solution at x_{2j+1} + theta*dx, time dt after t_n."""
    W = sol.states
    n = W.shape[0]
    dx = sol.grid.dx
    out = np.empty_like(W)
    if theta < 0.0:
        xi = (1.0 + theta) * dx / dt
        out[0] = bfan.sample(xi)
        if n > 1:
            out[1:] = sample_star(star, xi, k)
    else:
        xi = (theta - 1.0) * dx / dt
        if n > 1:
            out[:-1] = sample_star(star, xi, k)
        out[-1] = W[-1]
    return out


def rk4_source(x, U, dt, q, k):
    f = lambda V: euler.source(x, V, q, k)
    k1 = f(U)
    k2 = f(U + 0.5 * dt * k1)
    k3 = f(U + 0.5 * dt * k2)
    k4 = f(U + dt * k3)
    return U + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def couple_source(x, dt, U, q, k, coupling):
    if coupling == "contraction":
        return U + source.perturbation(x, dt, U, q, k)
    if coupling == "classical":
        return U.copy()
    if coupling == "splitting":
        return rk4_source(x, U, dt, q, k)
    raise ValueError(f"unknown coupling {coupling!r}")


def advance(sol, bdry, theta, q, k, *, safety=0.9, dt_max=np.inf, coupling="contraction", rho_floor=0.0,
            require_positive_velocity=False):
    """One time step; returns a StepRecord whose ``after`` is the new level."""
    if not (-1.0 < theta < 1.0):
        raise ValueError("theta must lie strictly inside (-1, 1)")
    if not (0.0 < safety < 1.0):
        raise ValueError("CFL safety factor must lie in (0, 1)")
    b_in, bfan, star = solve_fans(sol, bdry, k)
    smax = fan_speed(bfan, star, k)
    dt = min(safety * sol.grid.dx / smax, dt_max)
    if not dt > DT_FLOOR * max(1.0, sol.time):
        raise CFLCollapse(f"time step {dt:.3e} underflowed", time=sol.time)
    U_tilde = sample_cells(sol, bfan, star, theta, dt, k)
    x_s = sol.grid.centers + theta * sol.grid.dx
    try:
        U_new = couple_source(x_s, dt, U_tilde, q, k, coupling)
    except StateInvalid as e:
        raise PositivityViolation(f"source coupling left the admissible set: {e}", time=sol.time) from None
    bad = ~euler.valid_mask(U_new)
    if np.any(bad):
        raise PositivityViolation("non-positive density or pressure", cell=int(np.flatnonzero(bad)[0]),
                                  time=sol.time + dt)
    if rho_floor > 0.0 and np.any(U_new[:, 0] < rho_floor):
        j = int(np.flatnonzero(U_new[:, 0] < rho_floor)[0])
        raise PositivityViolation(f"density {U_new[j, 0]:.6g} below floor {rho_floor:.6g}", cell=j,
                                  time=sol.time + dt)
    if require_positive_velocity and np.any(U_new[:, 1] <= 0.0):
        j = int(np.flatnonzero(U_new[:, 1] <= 0.0)[0])
        raise PositivityViolation("non-positive velocity", cell=j, time=sol.time + dt)
    after = GridSolution(sol.grid, sol.time + dt, U_new, sol.theta_index + 1, dt, sol.step + 1)
    return StepRecord(sol, after, theta, dt, b_in, bfan, star, U_tilde, x_s, smax)


def glimm_step(sol, bdry, theta, q, k, **kw):
    """Generalized Glimm step with the contraction-matrix source coupling."""
    return advance(sol, bdry, theta, q, k, coupling="contraction", **kw).after


def classical_step(sol, bdry, theta, q, k, **kw):
    return advance(sol, bdry, theta, q, k, coupling="classical", **kw).after


def splitting_step(sol, bdry, theta, q, k, **kw):
    """Homogeneous Glimm step followed by an RK4 source step (oracle)."""
    return advance(sol, bdry, theta, q, k, coupling="splitting", **kw).after


def march(sol, bdry, q, k, sequence, *, t_final, max_steps=None, safety=0.9, coupling="contraction",
          rho_floor=0.0, require_positive_velocity=False):
    """Generator of StepRecords until t_final or max_steps."""
    n = 0
    while sol.time < t_final * (1.0 - 1e-14) and (max_steps is None or n < max_steps):
        theta = sequence(sol.theta_index)
        rec = advance(
            sol, bdry, theta, q, k,
            safety=safety, dt_max=t_final - sol.time, coupling=coupling,
            rho_floor=rho_floor, require_positive_velocity=require_positive_velocity,
        )
        yield rec
        sol = rec.after
        n += 1


def initial_solution(grid, profile, k):
    """GridSolution at t = 0 from a callable x -> (rho, u, P) arrays."""
    rho, u, P = profile(grid.centers)
    U = euler.to_conserved(np.stack([rho, u, P], axis=-1), k)
    return GridSolution(grid, 0.0, euler.check_states(U, what="initial state"))
