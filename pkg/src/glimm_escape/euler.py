"""Ideal-gas Euler equations in spherical symmetry with gravity and heating.

States are conserved triples U = (rho, m, E) with m = rho*u.  Every function
accepts either a single state or an array whose last axis has length 3, so
the same code serves the scalar API and the per-cell kernels.

The balance law is U_t + f(U)_x = h(x) g(x, U) with h = -2/x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import StateInvalid

# Internal energy must exceed this fraction of E; anything smaller is
# treated as vacuum and rejected.
INTERNAL_ENERGY_FLOOR = 1e-14


class ConservedState(NamedTuple):
    rho: float
    m: float
    E: float


class PrimitiveState(NamedTuple):
    rho: float
    u: float
    P: float


@dataclass(frozen=True)
class GasConstants:
    """Gas and planet constants.

    ``spherical=False`` drops the whole right-hand side (h = 0), which turns
    the system into the homogeneous Euler equations.
    """

    gamma: float = 1.4
    G_Mp: float = 0.0
    molecular_mass: float = 1.0
    cross_section: float = 1.0
    boltzmann: float = 1.0
    spherical: bool = True

    def __post_init__(self):
        if not (1.0 < self.gamma < 5.0 / 3.0):
            raise ValueError(f"gamma must lie in (1, 5/3), got {self.gamma}")
        if self.G_Mp < 0.0:
            raise ValueError("G_Mp must be nonnegative")
        if self.molecular_mass <= 0.0 or self.cross_section <= 0.0 or self.boltzmann <= 0.0:
            raise ValueError("molecular_mass, cross_section and boltzmann must be positive")

    @property
    def knudsen_constant(self):
        """gamma*G_Mp*mass/(sqrt(2)*tau); Kn = this/(x^2 rho c^2)."""
        return self.gamma * self.G_Mp * self.molecular_mass / (math.sqrt(2.0) * self.cross_section)


@dataclass(frozen=True)
class HeatProfile:
    """Volumetric heating q(x).

    kinds and parameters:
      zero
      gaussian_bump      (amplitude, center, width):  A exp(-((x-c)/w)^2)
      exponential_decay  (amplitude, x0, scale):      A exp(-(x-x0)/L)
      tabulated          (x_0, ..., x_n, q_0, ..., q_n), linear in between,
                         zero outside the table
    """

    kind: str = "zero"
    parameters: tuple = ()
    _table: tuple = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        p = tuple(float(v) for v in self.parameters)
        object.__setattr__(self, "parameters", p)
        if self.kind == "zero":
            return
        if self.kind in ("gaussian_bump", "exponential_decay"):
            if len(p) != 3:
                raise ValueError(f"{self.kind} takes 3 parameters")
            if p[2] <= 0.0:
                raise ValueError("width/scale must be positive")
        elif self.kind == "tabulated":
            if len(p) < 4 or len(p) % 2:
                raise ValueError("tabulated heat needs matching x and q columns")
            n = len(p) // 2
            xs, qs = np.array(p[:n]), np.array(p[n:])
            if np.any(np.diff(xs) <= 0.0):
                raise ValueError("tabulated x must be increasing")
            object.__setattr__(self, "_table", (xs, qs))
        else:
            raise ValueError(f"unknown heat profile kind {self.kind!r}")

    @property
    def is_zero(self):
        if self.kind == "zero":
            return True
        if self.kind == "tabulated":
            return not np.any(self._table[1])
        return self.parameters[0] == 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "gaussian_bump":
            a, c, w = self.parameters
            return a * np.exp(-(((x - c) / w) ** 2))
        if self.kind == "exponential_decay":
            a, x0, s = self.parameters
            return a * np.exp(-(x - x0) / s)
        xs, qs = self._table
        return np.interp(x, xs, qs, left=0.0, right=0.0)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "gaussian_bump":
            a, c, w = self.parameters
            return -2.0 * (x - c) / w**2 * a * np.exp(-(((x - c) / w) ** 2))
        if self.kind == "exponential_decay":
            a, x0, s = self.parameters
            return -a / s * np.exp(-(x - x0) / s)
        xs, qs = self._table
        slopes = np.diff(qs) / np.diff(xs)
        idx = np.searchsorted(xs, x, side="right") - 1
        inside = (idx >= 0) & (idx < len(slopes))
        return np.where(inside, slopes[np.clip(idx, 0, len(slopes) - 1)], 0.0)

    def l1_norm(self, x_B):
        """||q|| on [x_B, inf)."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "gaussian_bump":
            a, c, w = self.parameters
            return abs(a) * w * math.sqrt(math.pi) / 2.0 * math.erfc((x_B - c) / w)
        if self.kind == "exponential_decay":
            a, x0, s = self.parameters
            return abs(a) * s * math.exp(-(x_B - x0) / s)
        xs, qs = self._table
        grid = np.union1d(xs[xs > x_B], [x_B]) if x_B < xs[-1] else np.array([x_B])
        return float(np.trapezoid(np.abs(self(grid)), grid)) if grid.size > 1 else 0.0

    def prime_l1(self, x_B):
        """||q'|| on [x_B, inf), i.e. the total variation of q there."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "gaussian_bump":
            a, c, _ = self.parameters
            qb = abs(float(self(x_B)))
            return 2.0 * abs(a) - qb if x_B < c else qb
        if self.kind == "exponential_decay":
            return abs(float(self(x_B)))
        xs, _ = self._table
        grid = np.concatenate(([x_B], xs[xs > x_B]))
        vals = self(grid)
        # the table drops to zero at its right end
        return float(np.abs(np.diff(vals)).sum() + abs(vals[-1]))


# ---------------------------------------------------------------------------
# thermodynamics

def as_states(U):
    return np.asarray(U, dtype=float)


def pressure(U, k):
    U = as_states(U)
    rho, m, E = U[..., 0], U[..., 1], U[..., 2]
    return (k.gamma - 1.0) * (E - 0.5 * m * m / rho)


def velocity(U):
    U = as_states(U)
    return U[..., 1] / U[..., 0]


def sound_speed(U, k):
    U = as_states(U)
    rho, m, E = U[..., 0], U[..., 1], U[..., 2]
    u = m / rho
    return np.sqrt(k.gamma * (k.gamma - 1.0) * (E / rho - 0.5 * u * u))


def enthalpy(U, k):
    """Total specific enthalpy H = gamma E/rho - (gamma-1) u^2/2."""
    U = as_states(U)
    rho, m, E = U[..., 0], U[..., 1], U[..., 2]
    u = m / rho
    return k.gamma * E / rho - 0.5 * (k.gamma - 1.0) * u * u


def valid_mask(U):
    U = as_states(U)
    rho, m, E = U[..., 0], U[..., 1], U[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        internal = E - 0.5 * m * m / rho
        ok = (rho > 0.0) & (internal > INTERNAL_ENERGY_FLOOR * np.abs(E))
    return ok & np.all(np.isfinite(U), axis=-1)


def check_states(U, what="state"):
    """Raise StateInvalid unless every state has rho > 0 and P > 0."""
    ok = valid_mask(U)
    if not np.all(ok):
        bad = np.flatnonzero(~np.atleast_1d(ok))
        cell = int(bad[0]) if np.ndim(ok) else None
        raise StateInvalid(f"invalid {what}: non-positive density or internal energy", cell=cell)
    return U


def to_primitive(U, k):
    U = check_states(as_states(U))
    out = np.stack([U[..., 0], velocity(U), pressure(U, k)], axis=-1)
    if out.ndim == 1:
        return PrimitiveState(*map(float, out))
    return out


def to_conserved(W, k):
    W = np.asarray(W, dtype=float)
    rho, u, P = W[..., 0], W[..., 1], W[..., 2]
    if np.any(rho <= 0.0) or np.any(P <= 0.0):
        raise StateInvalid("primitive state needs rho > 0 and P > 0")
    out = np.stack([rho, rho * u, P / (k.gamma - 1.0) + 0.5 * rho * u * u], axis=-1)
    if out.ndim == 1:
        return ConservedState(*map(float, out))
    return out


def conserved(rho, u, P, k):
    """ConservedState from primitive scalars."""
    return to_conserved((rho, u, P), k)


# ---------------------------------------------------------------------------
# flux, Jacobian, source

def flux(U, k):
    U = check_states(as_states(U))
    g = k.gamma
    rho, m, E = U[..., 0], U[..., 1], U[..., 2]
    mm = m * m / rho
    return np.stack(
        [m, 0.5 * (3.0 - g) * mm + (g - 1.0) * E, m / rho * (g * E - 0.5 * (g - 1.0) * mm)],
        axis=-1,
    )


def jacobian(U, k):
    """Analytic df/dU."""
    U = check_states(as_states(U))
    g = k.gamma
    u = velocity(U)
    H = enthalpy(U, k)
    A = np.zeros(U.shape + (3,))
    A[..., 0, 1] = 1.0
    A[..., 1, 0] = 0.5 * (g - 3.0) * u * u
    A[..., 1, 1] = (3.0 - g) * u
    A[..., 1, 2] = g - 1.0
    A[..., 2, 0] = u * (0.5 * (g - 1.0) * u * u - H)
    A[..., 2, 1] = H - (g - 1.0) * u * u
    A[..., 2, 2] = g * u
    return A


def geometric_factor(x, k):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("radius must be positive")
    if not k.spherical:
        return np.zeros_like(x)
    return -2.0 / x


def gravity_speed_sq(x, k):
    """v^2 = G_Mp/(2x)."""
    return k.G_Mp / (2.0 * np.asarray(x, dtype=float))


def source(x, U, q, k):
    """h(x) g(x, U); the heating enters the energy row as +q(x)."""
    U = check_states(as_states(U))
    h = geometric_factor(x, k)
    g = k.gamma
    rho, m, E = U[..., 0], U[..., 1], U[..., 2]
    v2 = gravity_speed_sq(x, k)
    mm = m * m / rho
    x = np.asarray(x, dtype=float)
    heat = q(x) if k.spherical else 0.0
    g1 = m
    g2 = mm + v2 * rho
    g3 = m / rho * (g * E - 0.5 * (g - 1.0) * mm) + v2 * m
    return np.stack([h * g1, h * g2, h * g3 + heat * np.ones_like(h)], axis=-1)


# ---------------------------------------------------------------------------
# eigenstructure

def eigenvalues(U, k):
    U = check_states(as_states(U))
    u = velocity(U)
    c = sound_speed(U, k)
    return np.stack([u - c, u, u + c], axis=-1)


def right_eigenvectors(U, k):
    """Columns (-1, c-u, uc-H), (1, u, u^2/2), (1, c+u, uc+H)."""
    U = check_states(as_states(U))
    u = velocity(U)
    c = sound_speed(U, k)
    H = enthalpy(U, k)
    R = np.empty(U.shape + (3,))
    R[..., 0, 0] = -1.0
    R[..., 1, 0] = c - u
    R[..., 2, 0] = u * c - H
    R[..., 0, 1] = 1.0
    R[..., 1, 1] = u
    R[..., 2, 1] = 0.5 * u * u
    R[..., 0, 2] = 1.0
    R[..., 1, 2] = c + u
    R[..., 2, 2] = u * c + H
    return R


def left_eigenvectors(U, k):
    """Closed-form inverse of right_eigenvectors."""
    U = check_states(as_states(U))
    u = velocity(U)
    c = sound_speed(U, k)
    b1 = (k.gamma - 1.0) / (c * c)
    b2 = 0.5 * b1 * u * u
    L = np.empty(U.shape + (3,))
    # the first right eigenvector carries a minus sign, so does this row
    L[..., 0, 0] = -0.5 * (b2 + u / c)
    L[..., 0, 1] = 0.5 * (b1 * u + 1.0 / c)
    L[..., 0, 2] = -0.5 * b1
    L[..., 1, 0] = 1.0 - b2
    L[..., 1, 1] = b1 * u
    L[..., 1, 2] = -b1
    L[..., 2, 0] = 0.5 * (b2 - u / c)
    L[..., 2, 1] = -0.5 * (b1 * u - 1.0 / c)
    L[..., 2, 2] = 0.5 * b1
    return L


# ---------------------------------------------------------------------------
# dimensionless numbers

def mach(U, k):
    return np.abs(velocity(U)) / sound_speed(U, k)


def knudsen(x, U, k):
    """gamma G_Mp mass / (sqrt(2) tau x^2 rho c^2)."""
    U = check_states(as_states(U))
    x = np.asarray(x, dtype=float)
    psi = U[..., 0] * sound_speed(U, k) ** 2
    return k.knudsen_constant / (x * x * psi)
