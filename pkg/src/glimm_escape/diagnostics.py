"""Stability and consistency diagnostics for Glimm runs.

Wave strengths are linearised: the jump U_R - U_L expressed in the
eigenbasis R(U_anchor), eps = R^{-1}(U_anchor)(U_R - U_L), with |eps| the
l1 norm.  Two waves approach when the left one belongs to a higher family,
or both belong to the same family and at least one of them is a shock.
Shock-ness is read from the solved fans, never from the sign of eps.

``RunDiagnostics`` consumes the StepRecords of a run and produces, per time
level, the Glimm functional F = L + K Q and the checks of the interaction
and boundary estimates.  Constants that are only known to exist (the
interaction constant C', the boundary constant, the decay constant of F)
are fitted over the run and reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import euler, source
from .riemann import SHOCK

ALLOWANCE_FACTOR = 10.0


# ---------------------------------------------------------------------------
# wave strengths and interaction potential

@dataclass(frozen=True)
class WaveStrength:
    eps: np.ndarray
    location: tuple | None = None

    @property
    def magnitude(self):
        return float(np.abs(self.eps).sum())


def strengths(U_L, U_R, anchor, k):
    """R^{-1}(anchor)(U_R - U_L) for arrays of jumps."""
    Lm = euler.left_eigenvectors(anchor, k)
    d = np.asarray(U_R, dtype=float) - np.asarray(U_L, dtype=float)
    return np.einsum("...ij,...j->...i", Lm, d)


def wave_strengths(U_L, U_R, U_anchor, k, location=None):
    return WaveStrength(strengths(U_L, U_R, U_anchor, k), location)


def approach_matrix(shock_left, shock_right):
    """A[i, j] true when family i+1 on the left approaches family j+1 on the right."""
    sl = np.asarray(shock_left, dtype=bool)
    sr = np.asarray(shock_right, dtype=bool)
    i = np.arange(3)[:, None]
    j = np.arange(3)[None, :]
    return (i > j) | ((i == j) & (sl[:, None] | sr[None, :]))


def potentials(A, B, shock_a, shock_b):
    """D(alpha, beta) for arrays of pairs; shapes (n, 3)."""
    A = np.abs(np.asarray(A, dtype=float))
    B = np.abs(np.asarray(B, dtype=float))
    sa = np.asarray(shock_a, dtype=bool)
    sb = np.asarray(shock_b, dtype=bool)
    D = np.zeros(A.shape[:-1])
    for i in range(3):
        for j in range(3):
            if i > j:
                D = D + A[..., i] * B[..., j]
            elif i == j:
                D = D + A[..., i] * B[..., j] * (sa[..., i] | sb[..., j])
    return D


def interaction_potential(alpha, beta, shock_alpha=(False, False, False), shock_beta=(False, False, False)):
    """D(alpha, beta) = sum of |alpha_i beta_j| over approaching pairs."""
    a = alpha.eps if isinstance(alpha, WaveStrength) else alpha
    b = beta.eps if isinstance(beta, WaveStrength) else beta
    return float(potentials(a, b, shock_alpha, shock_beta))


def quadratic_potential(eps, shock):
    """Sum of D over all ordered pairs of wave groups, O(n) via prefix sums.

    eps, shock: (n, 3) arrays ordered left to right.
    """
    a = np.abs(np.asarray(eps, dtype=float))
    s = np.asarray(shock, dtype=bool)
    if a.shape[0] < 2:
        return 0.0
    # exclusive prefix sums over the groups to the left
    left_all = np.cumsum(a, axis=0) - a
    left_rare = np.cumsum(a * ~s, axis=0) - a * ~s
    Q = 0.0
    for j in range(3):
        higher = left_all[:, j + 1:].sum(axis=1)
        same = np.where(s[:, j], left_all[:, j], left_all[:, j] - left_rare[:, j])
        Q += float(np.sum((higher + same) * a[:, j]))
    return Q


@dataclass(frozen=True)
class GlimmFunctional:
    L: float
    Q: float
    F: float
    K: float
    K1: float
    boundary_term: float


def glimm_functional(eps, shock, K, K1, *, alpha0=0.0, beta1=0.0, l_B_sum=0.0):
    """F = L + K Q for one mesh curve.

    eps/shock hold every wave group crossing the curve, the boundary fan
    first.  alpha0 is the boundary 0-wave, which never approaches anything.
    """
    eps = np.asarray(eps, dtype=float).reshape(-1, 3)
    shock = np.asarray(shock, dtype=bool).reshape(-1, 3)
    bterm = K1 * (abs(beta1) + l_B_sum)
    L = float(np.abs(eps).sum()) + abs(alpha0) + bterm
    Q = quadratic_potential(eps, shock)
    return GlimmFunctional(L, Q, L + K * Q, K, K1, bterm)


# ---------------------------------------------------------------------------
# interaction estimates

@dataclass(frozen=True)
class Diamond:
    alpha: np.ndarray
    beta: np.ndarray
    eps: np.ndarray
    U_M: np.ndarray
    x_M: float
    dt: float
    dx: float
    shock_alpha: tuple = (False, False, False)
    shock_beta: tuple = (False, False, False)


@dataclass(frozen=True)
class EstimateReport:
    slack: float  # positive means the estimate is exceeded
    base: float  # slack before the fitted-constant term
    weight: float  # what the fitted constant multiplies
    allowance: float

    @property
    def violated(self):
        return self.slack > self.allowance


def source_rate(U_M, x_M, q, k):
    """zeta = (3-gamma)|u_M|/x_M; zero in planar geometry, where there is no source."""
    U = np.asarray(U_M, dtype=float)
    if not k.spherical:
        return np.zeros(U.shape[:-1])
    return (3.0 - k.gamma) * np.abs(U[..., 1] / U[..., 0]) / x_M


def source_constant(U_M, x_M, x_B, q, k):
    """C'' = sqrt(3)(rho u/x^2 + 2 rho v_B^2/(x^2 c) + (gamma-1)|q'|/c^2) at the middle state."""
    U = np.asarray(U_M, dtype=float)
    if not k.spherical:
        return np.zeros(U.shape[:-1])
    rho, m = U[..., 0], U[..., 1]
    c = euler.sound_speed(U, k)
    vB2 = float(euler.gravity_speed_sq(x_B, k))
    qp = np.abs(q.derivative(x_M))
    return math.sqrt(3.0) * (m / x_M**2 + 2.0 * rho * vB2 / (x_M**2 * c) + (k.gamma - 1.0) * qp / c**2)


def interaction_base(alpha, beta, eps, U_M, x_M, dt, dx, x_B, q, k):
    """|eps| - (1 - zeta dt)(|alpha| + |beta|) - C'' dt dx, vectorized."""
    zeta = source_rate(U_M, x_M, q, k)
    C2 = source_constant(U_M, x_M, x_B, q, k)
    a = np.abs(alpha).sum(axis=-1)
    b = np.abs(beta).sum(axis=-1)
    e = np.abs(eps).sum(axis=-1)
    return e - (1.0 - zeta * dt) * (a + b) - C2 * dt * dx


def check_interaction_estimate(diamond, q, k, C_prime, *, x_B=None, allowance_factor=ALLOWANCE_FACTOR):
    d = diamond
    x_B = d.x_M if x_B is None else x_B
    base = float(interaction_base(d.alpha, d.beta, d.eps, d.U_M, d.x_M, d.dt, d.dx, x_B, q, k))
    D = interaction_potential(d.alpha, d.beta, d.shock_alpha, d.shock_beta)
    return EstimateReport(base - C_prime * D, base, D, allowance_factor * d.dt**3)


@dataclass(frozen=True)
class BoundaryTriangle:
    alpha: np.ndarray  # (alpha_0, alpha_1, alpha_2, alpha_3); alpha_1 is zero unless the fan has a 1-wave
    beta1: float
    eps: np.ndarray  # (eps_0, eps_1, eps_2, eps_3)
    l_B: float
    dt: float = 0.0


def boundary_base(alpha, beta1, eps):
    """|eps| - |alpha + beta1 (1,1,1)| - |alpha_1|, the 1-vector acting on families 0, 2, 3."""
    alpha = np.asarray(alpha, dtype=float)
    hit = np.abs(alpha[..., [0, 2, 3]] + np.asarray(beta1)[..., None]).sum(axis=-1)
    return np.abs(eps).sum(axis=-1) - hit - np.abs(alpha[..., 1])


def boundary_weight(alpha, beta1, l_B):
    alpha = np.asarray(alpha, dtype=float)
    b = np.abs(beta1)
    return np.abs(alpha[..., [0, 2, 3]]).sum(axis=-1) * b + b + l_B


def check_boundary_estimate(tri, C, *, allowance_factor=ALLOWANCE_FACTOR):
    base = float(boundary_base(tri.alpha, tri.beta1, tri.eps))
    w = float(boundary_weight(tri.alpha, tri.beta1, tri.l_B))
    return EstimateReport(base - C * w, base, w, allowance_factor * tri.dt**3)


# ---------------------------------------------------------------------------
# total variation, continuity

def total_variation(sol_or_states):
    """(per-component TV, summed TV) of the cell states."""
    U = getattr(sol_or_states, "states", sol_or_states)
    per = np.abs(np.diff(np.asarray(U, dtype=float), axis=0)).sum(axis=0)
    return per, float(per.sum())


def l1_distance(U1, U2, dx):
    """int |U1 - U2| dx over the grid, cells of width 2 dx."""
    return float(np.abs(np.asarray(U1) - np.asarray(U2)).sum() * 2.0 * dx)


def continuity_constant(times, states, dx, dt):
    """max over snapshot pairs of int|U(t2) - U(t1)| / (|t2 - t1| + dt)."""
    best = 0.0
    S = np.asarray(states, dtype=float)
    T = np.asarray(times, dtype=float)
    for i in range(len(T) - 1):
        d = np.abs(S[i + 1:] - S[i]).sum(axis=(1, 2)) * 2.0 * dx
        best = max(best, float(np.max(d / (np.abs(T[i + 1:] - T[i]) + dt))))
    return best


# ---------------------------------------------------------------------------
# entropy pair and weak/entropy residuals

@dataclass(frozen=True)
class EntropyPair:
    """eta = -rho log(P / rho^gamma), omega = u eta."""

    def eta(self, U, k):
        U = np.asarray(U, dtype=float)
        rho = U[..., 0]
        return -rho * np.log(euler.pressure(U, k) / rho**k.gamma)

    def omega(self, U, k):
        return euler.velocity(U) * self.eta(U, k)

    def gradient(self, U, k):
        """d eta / dU in closed form."""
        U = np.asarray(U, dtype=float)
        g = k.gamma
        rho, m, E = U[..., 0], U[..., 1], U[..., 2]
        u = m / rho
        P = euler.pressure(U, k)
        s = np.log(P / rho**g)
        r = (g - 1.0) * rho / P
        return np.stack([-s + g - r * 0.5 * u * u, r * u, -r], axis=-1)


def bump(s):
    """C^1 bump (1 - s^2)^2 on [-1, 1]."""
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) < 1.0, (1.0 - s * s) ** 2, 0.0)


def bump_integral(s):
    """Antiderivative of bump, clipped to [-1, 1] and zero at s = -1."""
    s = np.clip(np.asarray(s, dtype=float), -1.0, 1.0)
    return s - 2.0 * s**3 / 3.0 + s**5 / 5.0 + 8.0 / 15.0


@dataclass(frozen=True)
class TestFunction:
    """phi(x, t) = bump((x - x_c)/a_x) bump((t - t_c)/a_t), restricted to x >= x_B, t >= 0."""

    x_c: float
    a_x: float
    t_c: float
    a_t: float
    name: str = ""

    def __call__(self, x, t):
        return bump((x - self.x_c) / self.a_x) * bump((t - self.t_c) / self.a_t)

    def x_integral(self, xl, xr):
        return self.a_x * (bump_integral((xr - self.x_c) / self.a_x) - bump_integral((xl - self.x_c) / self.a_x))

    def t_integral(self, t0, t1):
        return self.a_t * (bump_integral((t1 - self.t_c) / self.a_t) - bump_integral((t0 - self.t_c) / self.a_t))

    def x_factor(self, x):
        return bump((x - self.x_c) / self.a_x)

    def t_factor(self, t):
        return bump((t - self.t_c) / self.a_t)

    @property
    def t_end(self):
        return self.t_c + self.a_t


def standard_tests(x_B, x_max, t_final):
    """Interior bump, bump touching t = 0, bump touching x = x_B."""
    Lx = x_max - x_B
    return (
        TestFunction(x_B + 0.5 * Lx, 0.25 * Lx, 0.5 * t_final, 0.35 * t_final, "interior"),
        TestFunction(x_B + 0.6 * Lx, 0.25 * Lx, 0.0, 0.6 * t_final, "initial"),
        TestFunction(x_B, 0.4 * Lx, 0.5 * t_final, 0.4 * t_final, "boundary"),
    )


class ResidualAccumulator:
    """Streams the weak (or entropy) form of the balance law over time slabs.

    Inside slab [t_n, t_{n+1}) the solution is taken as the level-n cell
    states; the boundary trace is the boundary state of the fan, moved by
    the source over half a step.  The residual for test function phi is

        sum over slabs of  int int (V phi_t + W phi_x + Z phi)
        + int V(U_0) phi(x, 0) dx + int W(U(x_B, t)) phi(x_B, t) dt

    with (V, W, Z) = (U, f(U), h g) for the weak form and
    (eta, omega, d eta . h g) for the entropy form.
    """

    def __init__(self, tests, grid, q, k, pair=None):
        self.tests = tuple(tests)
        self.grid = grid
        self.q = q
        self.k = k
        self.pair = pair
        n = len(self.tests)
        width = 1 if pair is not None else 3
        self.residual = np.zeros((n, width))
        self.scale = np.zeros((n, width))
        self.covered = 0.0
        nodes = grid.interfaces
        self._xl, self._xr = nodes[:-1], nodes[1:]
        self._xc = grid.centers

    def _fields(self, U, x):
        k = self.k
        hg = euler.source(x, U, self.q, k)
        if self.pair is None:
            return U, euler.flux(U, k), hg
        V = self.pair.eta(U, k)[..., None]
        W = self.pair.omega(U, k)[..., None]
        Z = np.einsum("...i,...i->...", self.pair.gradient(U, k), hg)[..., None]
        return V, W, Z

    def _add(self, i, value):
        self.residual[i] += value.sum(axis=0) if value.ndim > 1 else value
        self.scale[i] += np.abs(value).sum(axis=0) if value.ndim > 1 else np.abs(value)

    def add_initial(self, U0):
        V, _, _ = self._fields(U0, self._xc)
        for i, phi in enumerate(self.tests):
            self._add(i, V * phi.x_integral(self._xl, self._xr)[:, None] * phi.t_factor(0.0))

    def add_slab(self, U, t0, t1, U_boundary):
        V, W, Z = self._fields(U, self._xc)
        Ub = np.asarray(U_boundary, dtype=float)
        _, Wb, _ = self._fields(Ub[None, :], np.array([self.grid.x_B]))
        for i, phi in enumerate(self.tests):
            if t0 >= phi.t_end or t1 <= phi.t_c - phi.a_t:
                continue
            cell = phi.x_integral(self._xl, self._xr)[:, None]
            dphi_t = cell * (phi.t_factor(t1) - phi.t_factor(t0))
            tint = phi.t_integral(t0, t1)
            dphi_x = (phi.x_factor(self._xr) - phi.x_factor(self._xl))[:, None] * tint
            self._add(i, V * dphi_t + W * dphi_x + Z * cell * tint)
            self._add(i, Wb[0] * phi.x_factor(self.grid.x_B) * tint)
        self.covered = max(self.covered, t1)

    def add_record(self, rec):
        """Slab of one StepRecord; boundary trace corrected by the source at mid-step."""
        U_B = np.asarray(rec.boundary_fan.boundary_state, dtype=float)
        if self.k.spherical:
            U_B = U_B + source.perturbation(self.grid.x_B, 0.5 * rec.dt, U_B, self.q, self.k)
        self.add_slab(rec.before.states, rec.before.time, rec.after.time, U_B)

    def result(self):
        """(residual, scale) per test function; vectors summed over components by l1."""
        for phi in self.tests:
            if self.covered < phi.t_end * (1.0 - 1e-12):
                raise ValueError(f"snapshots end at t={self.covered:.6g}, before the support of {phi.name!r} ends")
        return np.abs(self.residual).sum(axis=1), self.scale.sum(axis=1), self.residual


def weak_residual(solutions, boundary_states, tests, q, k, pair=None):
    """Residual from consecutive GridSolutions and the boundary states used between them."""
    acc = ResidualAccumulator(tests, solutions[0].grid, q, k, pair)
    acc.add_initial(solutions[0].states)
    for a, b, Ub in zip(solutions[:-1], solutions[1:], boundary_states):
        acc.add_slab(a.states, a.time, b.time, Ub)
    return acc.result()


def entropy_residual(solutions, boundary_states, tests, q, k, pair=None):
    """Signed entropy residual; should be >= 0 for an entropy solution and phi >= 0."""
    acc = ResidualAccumulator(tests, solutions[0].grid, q, k, pair or EntropyPair())
    acc.add_initial(solutions[0].states)
    for a, b, Ub in zip(solutions[:-1], solutions[1:], boundary_states):
        acc.add_slab(a.states, a.time, b.time, Ub)
    for phi in tests:
        if acc.covered < phi.t_end * (1.0 - 1e-12):
            raise ValueError("snapshots do not cover the test function support")
    return acc.residual[:, 0], acc.scale[:, 0]


# ---------------------------------------------------------------------------
# run-level constants

def stability_constant(eps_frac, gamma, min_uB, max_m, max_rho, c_min, x_B, G_Mp, qprime_l1):
    """The constant C3/C2 bounding the growth of L over a run.

    max over states of m + rho G/(x_B c*) + ... is bounded by the sum of the
    separate maxima.
    """
    inner = max_m + max_rho * G_Mp / (x_B * c_min) + (gamma - 1.0) * x_B * qprime_l1 / c_min**2
    return math.sqrt(3.0) * (1.0 + eps_frac) ** 2 / ((3.0 - gamma) * min_uB) * inner


def a2_margin(m_star, eps_frac, tv0, C):
    """m* - (1+eps)TV{U0} - (1+eps+eps^2)^2 C; positive means the velocity stays positive."""
    return m_star - (1.0 + eps_frac) * tv0 - (1.0 + eps_frac + eps_frac**2) ** 2 * C


def tv_bound(eps_frac, tv0, C):
    return (1.0 + eps_frac) * tv0 + (1.0 + eps_frac + eps_frac**2) ** 2 * C


@dataclass(frozen=True)
class KWindow:
    lower: float  # 2 C1
    upper: float  # eps/(TV{U0} + C)
    K: float
    inside: bool

    @property
    def empty(self):
        return not self.lower < self.upper


def k_window(C1, eps_frac, tv0, C, K=None):
    lower = 2.0 * C1
    upper = eps_frac / (tv0 + C)
    if K is None:
        K = math.sqrt(lower * upper) if 0.0 < lower < upper else max(2.0 * lower, 1.0)
    return KWindow(lower, upper, float(K), bool(lower < K <= upper))


# ---------------------------------------------------------------------------
# per-run accumulation

@dataclass
class LevelStats:
    step: int
    t: float
    L_waves: float  # interior + boundary strengths (without K1 terms)
    Q: float
    beta1: float
    tv: float
    min_u: float
    min_rho: float
    max_wave_speed: float
    boundary_input: tuple


def _fan_shock_flags(bfan):
    flags = [False, False, False]
    for w in bfan.base.waves:
        if w.kind == SHOCK:
            flags[w.family - 1] = True
    return flags


def level_waves(rec_like, k):
    """Strengths and shock flags of every wave group at one level.

    Returns (eps (n,3), shock (n,3), alpha0); row 0 is the boundary fan.
    """
    bfan, star, W = rec_like
    U_B = np.asarray(bfan.boundary_state, dtype=float)
    b = strengths(U_B, W[0], U_B, k)
    rows = [b[None, :]]
    flags = [np.array([_fan_shock_flags(bfan)])]
    if W.shape[0] > 1:
        anchor = 0.5 * (W[:-1] + W[1:])
        rows.append(strengths(W[:-1], W[1:], anchor, k))
        sh = np.zeros((W.shape[0] - 1, 3), dtype=bool)
        sh[:, 0] = star.shock_l
        sh[:, 2] = star.shock_r
        flags.append(sh)
    return np.concatenate(rows), np.concatenate(flags), float(bfan.zero_wave_strength)


@dataclass
class RunSummary:
    levels: list
    L: np.ndarray
    Q: np.ndarray
    F: np.ndarray
    K: float
    K1: float
    decay_constant: float
    decay_violations: int
    C_prime: float
    interaction_violations: int
    interaction_diamonds: int
    interaction_max_zero_d_slack: float
    boundary_C: float
    boundary_violations: int
    per_step_interaction_violations: np.ndarray
    per_step_boundary_violations: np.ndarray
    extra: dict = field(default_factory=dict)


class RunDiagnostics:
    """Accumulates per-level quantities and estimate checks from StepRecords."""

    def __init__(self, grid, q, k, *, K=None, K1=2.0, allowance_factor=ALLOWANCE_FACTOR):
        self.grid = grid
        self.q = q
        self.k = k
        self.K = K
        self.K1 = K1
        self.allowance_factor = allowance_factor
        self.levels = []
        self._int_ratio = []  # per step: max (base - allowance)/D over D > 0
        self._int_zero = []  # per step: slacks of D = 0 diamonds above the allowance
        self._int_zero_max = []
        self._int_count = 0
        self._bnd = []  # per step: (base, weight, allowance)
        self._prev = None
        self.max_m = 0.0
        self.max_rho = 0.0
        self.min_c = np.inf
        self.max_char = 0.0
        self.min_u_visited = np.inf
        self.min_rho_visited = np.inf
        self.dt_max = 0.0
        self.boundary_E = []

    # level n quantities -------------------------------------------------
    def _level(self, step, t, W, bfan, star, b_in, max_speed):
        eps, shock, alpha0 = level_waves((bfan, star, W), self.k)
        L_waves = float(np.abs(eps).sum()) + alpha0
        Q = quadratic_potential(eps, shock)
        beta1 = float(abs(eps[1, 0])) if eps.shape[0] > 1 else 0.0
        u = W[:, 1] / W[:, 0]
        self._visit(W)
        self._visit(np.asarray(bfan.base.states))
        _, tv = total_variation(W)
        self.boundary_E.append(float(bfan.E_B))
        return LevelStats(step, t, L_waves, Q, beta1, tv, float(u.min()), float(W[:, 0].min()), max_speed, b_in)

    def _visit(self, U):
        U = np.asarray(U, dtype=float)
        c = euler.sound_speed(U, self.k)
        self.max_m = max(self.max_m, float(U[:, 1].max()))
        self.max_rho = max(self.max_rho, float(U[:, 0].max()))
        self.min_c = min(self.min_c, float(c.min()))
        self.max_char = max(self.max_char, float(np.max(np.abs(U[:, 1] / U[:, 0]) + c)))
        self.min_u_visited = min(self.min_u_visited, float(np.min(U[:, 1] / U[:, 0])))
        self.min_rho_visited = min(self.min_rho_visited, float(U[:, 0].min()))

    # diamonds ------------------------------------------------------------
    def _diamonds(self, rec):
        k = self.k
        W = rec.before.states
        Ut = rec.sampled
        Wn = rec.after.states
        n = W.shape[0]
        if n < 2:
            self._int_ratio.append(0.0)
            self._int_zero.append(0)
            self._int_zero_max.append(-np.inf)
            return
        star = rec.star
        fan_flags = np.zeros((n + 1, 3), dtype=bool)  # node 2j for j = 0..n (last is the outflow edge)
        fan_flags[0] = _fan_shock_flags(rec.boundary_fan)
        fan_flags[1:n, 0] = star.shock_l
        fan_flags[1:n, 2] = star.shock_r
        kk = np.arange(1, n)  # new Riemann problems between cells k-1 and k
        if rec.theta < 0.0:
            mid = kk - 1
            left_fan, right_fan = kk - 1, kk
        else:
            mid = kk
            left_fan, right_fan = kk, kk + 1
        U_M = W[mid]
        alpha = strengths(Ut[kk - 1], U_M, U_M, k)
        beta = strengths(U_M, Ut[kk], U_M, k)
        eps = strengths(Wn[kk - 1], Wn[kk], U_M, k)
        x_M = self.grid.centers[mid]
        base = interaction_base(alpha, beta, eps, U_M, x_M, rec.dt, self.grid.dx, self.grid.x_B, self.q, k)
        D = potentials(alpha, beta, fan_flags[left_fan], fan_flags[right_fan])
        allow = self.allowance_factor * rec.dt**3
        pos = D > 0.0
        self._int_ratio.append(float(np.max((base[pos] - allow) / D[pos])) if pos.any() else -np.inf)
        zero_slack = base[~pos] - allow
        self._int_zero.append(int(np.sum(zero_slack > 0.0)))
        self._int_zero_max.append(float(zero_slack.max()) if zero_slack.size else -np.inf)
        self._int_count += kk.size

    # boundary triangle ---------------------------------------------------
    def _boundary(self, rec, next_fan, next_input):
        k = self.k
        W = rec.before.states
        U_Bn = np.asarray(rec.boundary_fan.boundary_state, dtype=float)
        if rec.theta < 0.0:
            right = rec.sampled[0]
            beta1 = 0.0
        else:
            right = W[0]
            beta1 = float(strengths(W[0], rec.sampled[0], W[0], k)[0]) if W.shape[0] > 1 else 0.0
        a = strengths(U_Bn, right, U_Bn, k)
        alpha = np.array([rec.boundary_fan.zero_wave_strength, a[0], a[1], a[2]])
        U_B1 = np.asarray(next_fan.boundary_state, dtype=float)
        e = strengths(U_B1, rec.after.states[0], U_B1, k)
        eps = np.array([next_fan.zero_wave_strength, e[0], e[1], e[2]])
        (r0, m0), (r1, m1) = rec.boundary_input, next_input
        l_B = abs(r1 - r0) + abs(m1 - m0)
        self._bnd.append((float(boundary_base(alpha, beta1, eps)), float(boundary_weight(alpha, beta1, l_B)),
                          self.allowance_factor * rec.dt**3))

    # public --------------------------------------------------------------
    def add(self, rec):
        if self._prev is not None:
            prev = self._prev
            self._boundary(prev, rec.boundary_fan, rec.boundary_input)
        self.levels.append(self._level(rec.before.step, rec.before.time, rec.before.states, rec.boundary_fan,
                                       rec.star, rec.boundary_input, rec.max_speed))
        self._visit(rec.sampled)
        self._visit(rec.after.states)
        self._diamonds(rec)
        self.dt_max = max(self.dt_max, rec.dt)
        self._prev = rec

    def finish(self, bdry, q=None):
        """Close the last level (needs one extra fan solve) and fit constants."""
        from .glimm import fan_speed, solve_fans

        if self._prev is None:
            return None
        last = self._prev.after
        b_in, bfan, star = solve_fans(last, bdry, self.k)
        self._boundary(self._prev, bfan, b_in)
        self.levels.append(self._level(last.step, last.time, last.states, bfan, star, b_in,
                                       fan_speed(bfan, star, self.k)))
        return self.summary()

    def summary(self):
        lv = self.levels
        n = len(lv)
        inputs = np.array([l.boundary_input for l in lv])
        lB = np.abs(np.diff(inputs, axis=0)).sum(axis=1) if n > 1 else np.zeros(0)
        suffix = np.concatenate([np.cumsum(lB[::-1])[::-1], [0.0]])
        L_waves = np.array([l.L_waves for l in lv])
        beta1 = np.array([l.beta1 for l in lv])
        L = L_waves + self.K1 * (beta1 + suffix)
        Q = np.array([l.Q for l in lv])
        ratios = np.array(self._int_ratio) if self._int_ratio else np.zeros(0)
        C_prime = float(max(0.0, ratios.max())) if ratios.size and np.isfinite(ratios.max()) else 0.0
        bnd = np.array(self._bnd) if self._bnd else np.zeros((0, 3))
        pos = bnd[:, 1] > 0.0 if bnd.size else np.zeros(0, dtype=bool)
        C_b = float(max(0.0, np.max((bnd[pos, 0] - bnd[pos, 2]) / bnd[pos, 1]))) if pos.any() else 0.0
        b_viol = (~pos) & (bnd[:, 0] > bnd[:, 2]) if bnd.size else np.zeros(0, dtype=bool)
        K = self.K if self.K is not None else 1.0
        F = L + K * Q
        dx2 = self.grid.dx**2
        jumps = np.diff(F)
        C_F = float(max(0.0, jumps.max()) / dx2) if jumps.size else 0.0
        return RunSummary(
            levels=lv,
            L=L,
            Q=Q,
            F=F,
            K=K,
            K1=self.K1,
            decay_constant=C_F,
            decay_violations=int(np.sum(jumps > C_F * dx2 * (1 + 1e-12))),
            C_prime=C_prime,
            interaction_violations=int(sum(self._int_zero)),
            interaction_diamonds=self._int_count,
            interaction_max_zero_d_slack=float(max(self._int_zero_max)) if self._int_zero_max else -np.inf,
            boundary_C=C_b,
            boundary_violations=int(b_viol.sum()),
            per_step_interaction_violations=np.array(self._int_zero),
            per_step_boundary_violations=b_viol.astype(int),
        )

    def with_K(self, K):
        self.K = K
        return self.summary()
