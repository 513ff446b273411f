"""Coupling of gravity and heating to the homogeneous Riemann solution.

Over one time step the homogeneous solution U~ is corrected to U = S U~,
where S(x, t, U~) is a lower-triangular 3x3 matrix obtained by linearising
the source ODE around U~ and solving it exactly.  With

    h = -2/x,  v = sqrt(G_Mp/(2x)),  u = m~/rho~,  w = (gamma-1) u,

the diagonal is e^{hut} cosh(hvt) (twice) and e^{gamma h u t} plus a
correction; the remaining entries mix the three exponentials
e^{h(u+v)t}, e^{h(u-v)t}, e^{gamma h u t}.

The closed form written with 1/(v^2 - w^2) and 1/m~ prefactors has two
removable singularities.  Here every entry is written through
phi1(z) = (e^z - 1)/z, which is bounded and smooth, so there is nothing to
guard: the formulas stay exact at v = +-w and at m~ = 0, and S - I is
computed without cancellation for small t.

A second construction through the eigen-decomposition of the linearised
source (``perturbation_via_transition_matrix``) is kept as an oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import euler
from .errors import SingularEigenbasis

AVERAGE_SAMPLES = 16
EIGEN_TOL = 1e-8


def phi1(z):
    """(e^z - 1)/z with the removable point z = 0 filled in."""
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.expm1(z) / z
    return np.where(z == 0.0, 1.0, out)


class Increments(NamedTuple):
    """Nonzero entries of S - I."""

    d11: np.ndarray  # also d22
    d21: np.ndarray
    d31: np.ndarray
    d32: np.ndarray
    d33: np.ndarray


def contraction_increments(x, t, U, q, k):
    """Entries of S(x, t, U) - I for arrays of points.

    x and t broadcast against U[..., 0].
    """
    U = np.asarray(U, dtype=float)
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    g = k.gamma
    h = euler.geometric_factor(x, k)
    v = np.sqrt(euler.gravity_speed_sq(x, k))
    rho = U[..., 0]
    u = U[..., 1] / rho
    w = (g - 1.0) * u
    kk = (g - 1.0) * u * u
    a = g * h * u
    ep = np.expm1(h * (u + v) * t)
    em = np.expm1(h * (u - v) * t)
    Ea = np.exp(a * t)
    Gp = h * t * Ea * phi1(h * (v - w) * t)
    Gm = -h * t * Ea * phi1(-h * (v + w) * t)
    Phi = 0.5 * (Gp + Gm)
    Qd = 2.0 * v * v + 3.0 * w * v + 3.0 * w * w - (3.0 * g - 2.0) * kk
    Qd2 = 2.0 * v * v - 3.0 * w * v + 3.0 * w * w - (3.0 * g - 2.0) * kk
    heat = q(x) if k.spherical else np.zeros_like(x)
    d11 = 0.5 * (ep + em)
    d21 = 0.5 * v * (ep - em)
    d31 = (-0.5 * x * h) * heat * t * phi1(a * t) / rho + v**3 * Phi
    d32 = 0.25 * (Gp * Qd2 - Gm * Qd)
    d33 = np.expm1(a * t) + g * v * Phi
    shape = np.broadcast_shapes(d11.shape, d31.shape, d33.shape)
    return Increments(*(np.broadcast_to(d, shape) for d in (d11, d21, d31, d32, d33)))


def perturbation(x, t, U, q, k):
    """(S - I) U evaluated with S taken at U itself."""
    U = np.asarray(U, dtype=float)
    d = contraction_increments(x, t, U, q, k)
    rho, m, E = U[..., 0], U[..., 1], U[..., 2]
    return np.stack([d.d11 * rho, d.d21 * rho + d.d11 * m, d.d31 * rho + d.d32 * m + d.d33 * E], axis=-1)


def evolve(x, t, U, q, k):
    """U~ -> S(x, t, U~) U~ for arrays of points; raises StateInvalid on failure."""
    U = np.asarray(U, dtype=float)
    out = U + perturbation(x, t, U, q, k)
    return euler.check_states(out, what="source-corrected state")


@dataclass(frozen=True)
class ContractionMatrix:
    entries: np.ndarray
    delta: np.ndarray  # entries - I, computed directly
    x: float
    t: float
    U_tilde: euler.ConservedState


def contraction(x, t, U_tilde, q, k):
    """S(x, t, U~) at a single point."""
    if x <= 0.0:
        raise ValueError("radius must be positive")
    if t < 0.0:
        raise ValueError("time must be nonnegative")
    U = euler.check_states(np.asarray(U_tilde, dtype=float))
    d = contraction_increments(x, t, U, q, k)
    delta = np.array(
        [
            [float(d.d11), 0.0, 0.0],
            [float(d.d21), float(d.d11), 0.0],
            [float(d.d31), float(d.d32), float(d.d33)],
        ]
    )
    return ContractionMatrix(np.eye(3) + delta, delta, float(x), float(t), euler.ConservedState(*map(float, U)))


def apply(U_tilde, S):
    """S U~, computed as U~ + (S - I) U~ so that t = 0 returns U~ unchanged."""
    U = np.asarray(U_tilde, dtype=float)
    out = U + S.delta @ U
    euler.check_states(out, what="source-corrected state")
    return euler.ConservedState(*map(float, out))


def first_order_perturbation(x, dt, U, q, k):
    """Leading term of (S - I) U in dt: dt * h(x) g(x, U)."""
    U = np.asarray(U, dtype=float)
    g = k.gamma
    rho = U[..., 0]
    u = U[..., 1] / rho
    c2 = euler.sound_speed(U, k) ** 2
    v2 = euler.gravity_speed_sq(x, k)
    h = euler.geometric_factor(x, k)
    heat = q(x) if k.spherical else 0.0
    # -rho dt/x written as h rho dt/2 so that planar geometry gives zero
    s = 0.5 * h * rho * dt
    return np.stack(
        [
            s * 2.0 * u,
            s * 2.0 * (u * u + v2),
            s * u * (u * u + 2.0 * v2 + 2.0 * c2 / (g - 1.0)) + dt * heat,
        ],
        axis=-1,
    )


# ---------------------------------------------------------------------------
# transition-matrix construction (oracle)

def transition_modes(x, U, k):
    """Eigen-decomposition of the linearised source matrix B at U.

    Returns (sigma, P, Pinv) with B = P diag(sigma) P^{-1}.  Raises
    SingularEigenbasis when v is negligible or v = +-(gamma-1)u, where two
    eigenvectors merge.
    """
    g = k.gamma
    U = np.asarray(U, dtype=float)
    rho, m, E = U
    u = m / rho
    c = float(euler.sound_speed(U, k))
    h = float(euler.geometric_factor(x, k))
    v = float(np.sqrt(euler.gravity_speed_sq(x, k)))
    w = (g - 1.0) * u
    if v <= EIGEN_TOL * (abs(u) + c):
        raise SingularEigenbasis("gravity speed too small for the eigenbasis")
    if abs(v * v - w * w) < EIGEN_TOL * (v * v + w * w):
        raise SingularEigenbasis("v = +-(gamma-1)u: eigenvectors merge")
    d1 = v**3 / (v - w) + (2 * v * v - w * (u + 3 * v)) / (2 * (v - w)) * u + g * v * E / (rho * (v - w))
    d2 = v**3 / (v + w) - (2 * v * v - w * (u - 3 * v)) / (2 * (v + w)) * u + g * v * E / (rho * (v + w))
    P = np.array([[1.0, 0.0, 1.0], [u + v, 0.0, u - v], [d1, 1.0, d2]])
    sigma = h * np.array([u + v, g * u, u - v])
    return sigma, P, np.linalg.inv(P)


def transition_matrix(x, t, U, k):
    """N(x, t) = P e^{diag(sigma) t} P^{-1}."""
    sigma, P, Pinv = transition_modes(x, U, k)
    return (P * np.exp(sigma * t)) @ Pinv


def source_forcing(x, U, q, k):
    """Constant term C = h(x) g(x, U) of the linearised source."""
    return euler.source(x, U, q, k)


def perturbation_via_transition_matrix(x, dt, U, q, k):
    """Solution at dt of Y' = B Y + C, Y(0) = 0, with B, C frozen at U."""
    sigma, P, Pinv = transition_modes(x, U, k)
    C = source_forcing(x, np.asarray(U, dtype=float), q, k)
    weights = dt * phi1(sigma * dt)  # int_0^dt e^{sigma (dt - s)} ds
    return P @ (weights * (Pinv @ C))


# ---------------------------------------------------------------------------
# time averaging of coefficients

def time_average(values, dt=None):
    """Trapezoid mean of samples taken on a uniform grid over one step."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    if n == 1:
        return values[0]
    return (0.5 * (values[0] + values[-1]) + values[1:-1].sum(axis=0)) / (n - 1)


def averaged_state(fan, x_rel, dt, samples=AVERAGE_SAMPLES):
    """Time average over [0, dt] of a wave fan seen at fixed offset x_rel."""
    ts = np.linspace(0.0, dt, samples)
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = np.where(ts > 0.0, x_rel / ts, np.copysign(np.inf, x_rel) if x_rel != 0.0 else 0.0)
    vals = np.array([fan.sample(float(z)) for z in xi])
    return time_average(vals)
