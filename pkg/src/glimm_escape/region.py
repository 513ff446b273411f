"""Hydrodynamic region: where the flow is supersonic and where it is a continuum.

Lower bound on the Mach number
    Mb(x) = (m0(x) - TV{m0} - TV{m_B})
            / sqrt(gamma (gamma-1) E* (rho0(x) + TV{rho0} + TV{rho_B}))
with E* = max E0 + TV{E0} + TV{E(x_B, .)} + 2 ||q||_1 / lambda*.  The
supersonic radius x* is the smallest root of Mb = 1.

Upper bound on the Knudsen number
    Kb(x) = gamma G_Mp mass / (sqrt(2) tau x_B^2 psi*(x)),
    psi*(x) = psi0(x) - TV{psi0} - TV{psi(x_B, .)} - 2 gamma (gamma-1) ||q||_1 / lambda*,
with psi = rho c^2.  The Knudsen radius x** is the smallest root of Kb = 1.
Where psi* <= 0 the bound is infinite.

Boundary total variations are taken over the run horizon only.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import bisect

from . import euler
from .errors import NoCrossing, PreconditionFailed

ROOT_RTOL = 1e-10  # |dx_root| <= ROOT_RTOL * x_B
SCAN_POINTS = 4097
DOMINANCE_RTOL = 1e-12


def _tv(a):
    a = np.asarray(a, dtype=float)
    return float(np.abs(np.diff(a)).sum()) if a.size > 1 else 0.0


@dataclass(frozen=True)
class ProfileBounds:
    tv_rho0: float
    tv_m0: float
    tv_E0: float
    tv_rhoB: float
    tv_mB: float
    tv_EB: float
    tv_psi0: float
    tv_psiB: float
    q_l1: float
    lambda_star: float
    max_E0: float
    horizon: float = math.inf  # boundary TVs are taken over [0, horizon]

    def __post_init__(self):
        vals = asdict(self)
        if any(v < 0.0 for v in vals.values()):
            raise ValueError("profile bounds must be nonnegative")
        if not self.lambda_star > 0.0:
            raise ValueError("lambda* must be positive")

    @property
    def E_star(self):
        return self.max_E0 + self.tv_E0 + self.tv_EB + 2.0 * self.q_l1 / self.lambda_star


@dataclass(frozen=True)
class InitialProfile:
    """Initial data as a callable x -> (rho0, m0, E0), with the domain it lives on."""

    fn: object
    x_B: float
    x_max: float
    samples: int = SCAN_POINTS

    def __call__(self, x):
        rho, m, E = self.fn(np.asarray(x, dtype=float))
        return np.asarray(rho, float), np.asarray(m, float), np.asarray(E, float)

    @classmethod
    def tabulated(cls, x, U):
        """Piecewise-linear interpolation of tabulated (rho, m, E)."""
        x = np.asarray(x, dtype=float)
        U = np.asarray(U, dtype=float)

        def fn(y):
            return tuple(np.interp(y, x, U[:, i]) for i in range(3))

        return cls(fn, float(x[0]), float(x[-1]), max(SCAN_POINTS, x.size))

    @classmethod
    def from_primitive(cls, prim, x_B, x_max, k):
        """From a callable x -> (rho, u, P)."""

        def fn(y):
            rho, u, P = prim(y)
            U = euler.to_conserved(np.stack(np.broadcast_arrays(rho, u, P), axis=-1), k)
            return U[..., 0], U[..., 1], U[..., 2]

        return cls(fn, float(x_B), float(x_max))

    def table(self, n=None):
        x = np.linspace(self.x_B, self.x_max, n or self.samples)
        return x, np.stack(self(x), axis=-1)


def psi(U, k):
    """rho c^2 = gamma P."""
    U = euler.as_states(U)
    return k.gamma * euler.pressure(U, k)


def profile_bounds(profile, k, *, q=None, boundary_rho=(), boundary_m=(), boundary_E=(), lambda_star=math.inf,
                   horizon=math.inf):
    """ProfileBounds from the initial profile and the logged boundary history."""
    x, U = profile.table()
    rB, mB, EB = (np.asarray(a, dtype=float) for a in (boundary_rho, boundary_m, boundary_E))
    g = k.gamma
    psiB = g * (g - 1.0) * (EB - 0.5 * mB**2 / rB) if EB.size else np.zeros(0)
    q_l1 = q.l1_norm(profile.x_B) if (q is not None and k.spherical) else 0.0
    return ProfileBounds(
        tv_rho0=_tv(U[:, 0]),
        tv_m0=_tv(U[:, 1]),
        tv_E0=_tv(U[:, 2]),
        tv_rhoB=_tv(rB),
        tv_mB=_tv(mB),
        tv_EB=_tv(EB),
        tv_psi0=_tv(psi(U, k)),
        tv_psiB=_tv(psiB),
        q_l1=float(q_l1),
        lambda_star=float(lambda_star),
        max_E0=float(U[:, 2].max()),
        horizon=float(horizon),
    )


# ---------------------------------------------------------------------------
# Mach bound

def mach_bound(x, profile, bounds, k, *, with_flag=False):
    """Mb(x); negative numerators are clamped to 0 and flagged."""
    rho0, m0, _ = profile(x)
    num = m0 - bounds.tv_m0 - bounds.tv_mB
    den = np.sqrt(k.gamma * (k.gamma - 1.0) * bounds.E_star * (rho0 + bounds.tv_rho0 + bounds.tv_rhoB))
    clamped = num < 0.0
    val = np.where(clamped, 0.0, num / den)
    if with_flag:
        return val, clamped
    return val


def _first_crossing(f, lo, hi, n, what):
    """Smallest root of f on [lo, hi] with f(lo) < 0; bracketed by a scan then bisection."""
    xs = np.linspace(lo, hi, n)
    fx = f(xs)
    above = np.flatnonzero(fx >= 0.0)
    if above.size == 0:
        raise NoCrossing(f"{what} never reaches 1 on [{lo:.10g}, {hi:.10g}]")
    i = int(above[0])
    if i == 0:
        return float(lo)
    a, b = float(xs[i - 1]), float(xs[i])
    return bisect(lambda s: float(f(np.array([s]))[0]), a, b, xtol=ROOT_RTOL * abs(lo), rtol=4 * np.finfo(float).eps,
                  maxiter=400)


def find_x_star(profile, bounds=None, k=None, bracket=None, *, samples=SCAN_POINTS):
    """Smallest root of Mb(x) = 1.

    ``profile`` may instead be any callable x -> Mb(x) (bounds and k unused);
    then ``bracket`` is required.
    """
    if bounds is None:
        mb = profile
        if bracket is None:
            raise ValueError("a bracket is needed for a bare Mach-bound function")
    else:
        def mb(x):
            return mach_bound(x, profile, bounds, k)

        if bracket is None:
            bracket = (profile.x_B, profile.x_max)
    lo, hi = map(float, bracket)
    m_lo = float(np.asarray(mb(np.array([lo])))[0])
    if m_lo >= 1.0:
        raise PreconditionFailed(f"Mach bound at the inner radius is {m_lo:.6g} >= 1")
    return _first_crossing(lambda s: np.asarray(mb(s), dtype=float) - 1.0, lo, hi, samples, "Mach bound")


# ---------------------------------------------------------------------------
# Knudsen bound

def psi_star(x, profile, bounds, k):
    rho0, m0, E0 = profile(x)
    U0 = np.stack([rho0, m0, E0], axis=-1)
    g = k.gamma
    return psi(U0, k) - bounds.tv_psi0 - bounds.tv_psiB - 2.0 * g * (g - 1.0) * bounds.q_l1 / bounds.lambda_star


def knudsen_bound(x, profile, bounds, k):
    """Kb(x), +inf where psi* <= 0.  Uses x_B^2, not x^2."""
    ps = psi_star(x, profile, bounds, k)
    with np.errstate(divide="ignore"):
        return np.where(ps > 0.0, k.knudsen_constant / (profile.x_B**2 * np.where(ps > 0.0, ps, 1.0)), np.inf)


def knudsen_condition(profile, k):
    """x_B^2 rho0(x_B) c0(x_B)^2 - gamma G_Mp mass/(sqrt(2) tau); positive is required."""
    rho0, m0, E0 = profile(np.array([profile.x_B]))
    U0 = np.stack([rho0, m0, E0], axis=-1)
    return float(profile.x_B**2 * psi(U0, k)[0] - k.knudsen_constant)


def find_x_star_star(profile, bounds, k, bracket=None, *, samples=SCAN_POINTS):
    """Smallest root of Kb(x) = 1.

    Solved as psi*(x) = K/x_B^2, which has the same root and stays finite
    where psi* changes sign.
    """
    if knudsen_condition(profile, k) <= 0.0:
        raise PreconditionFailed("Knudsen condition x_B^2 rho0 c0^2 > gamma G_Mp mass/(sqrt(2) tau) fails")
    lo, hi = bracket if bracket is not None else (profile.x_B, profile.x_max)
    target = k.knudsen_constant / profile.x_B**2
    if float(psi_star(np.array([lo]), profile, bounds, k)[0]) <= target:
        raise PreconditionFailed("Knudsen bound at the inner radius is already >= 1")
    return _first_crossing(lambda s: target - psi_star(s, profile, bounds, k), float(lo), float(hi), samples,
                           "Knudsen bound")


# ---------------------------------------------------------------------------
# checks over a run

@dataclass(frozen=True)
class Monotonicity:
    rho0_decreasing: bool
    E0_decreasing: bool
    m0_increasing: bool
    psi0_decreasing: bool
    subsonic_base: bool

    @property
    def all(self):
        return all(asdict(self).values())


def monotonicity(profile, k):
    x, U = profile.table()
    d = np.diff(U, axis=0)
    u = U[0, 1] / U[0, 0]
    c = float(euler.sound_speed(U[0], k))
    return Monotonicity(
        rho0_decreasing=bool(np.all(d[:, 0] <= 0.0)),
        E0_decreasing=bool(np.all(d[:, 2] <= 0.0)),
        m0_increasing=bool(np.all(d[:, 1] >= 0.0)),
        psi0_decreasing=bool(np.all(np.diff(psi(U, k)) <= 0.0)),
        subsonic_base=bool(u < c),
    )


@dataclass
class DominanceReport:
    points: int = 0
    mach_violations: int = 0
    knudsen_violations: int = 0
    lemma_violations: dict = field(default_factory=lambda: {"rho": 0, "m": 0, "E": 0})
    worst_mach_margin: float = math.inf  # min of Mach - Mb
    worst_knudsen_margin: float = math.inf  # min of Kb - Kn
    worst_lemma_margin: dict = field(default_factory=lambda: {"rho": math.inf, "m": math.inf, "E": math.inf})

    @property
    def ok(self):
        return self.mach_violations == 0 and self.knudsen_violations == 0 and not any(self.lemma_violations.values())


def lemma_bounds(bounds):
    """Allowed |U - U0| per component."""
    return {
        "rho": bounds.tv_rho0 + bounds.tv_rhoB,
        "m": bounds.tv_m0 + bounds.tv_mB,
        "E": bounds.tv_E0 + bounds.tv_EB + 2.0 * bounds.q_l1 / bounds.lambda_star,
    }


def check_snapshot(report, x, U, profile, bounds, k):
    """Accumulate dominance and bounded-drift checks at one time level."""
    x = np.asarray(x, dtype=float)
    U = euler.as_states(np.asarray(U, dtype=float))
    Ma = euler.mach(U, k)
    mb = mach_bound(x, profile, bounds, k)
    dm = Ma - mb
    report.mach_violations += int(np.sum(dm < -DOMINANCE_RTOL * np.maximum(1.0, mb)))
    report.worst_mach_margin = min(report.worst_mach_margin, float(dm.min()))
    if k.knudsen_constant > 0.0:
        kn = euler.knudsen(x, U, k)
        kb = knudsen_bound(x, profile, bounds, k)
        dk = kb - kn
        report.knudsen_violations += int(np.sum(dk < -DOMINANCE_RTOL * np.maximum(1.0, kn)))
        report.worst_knudsen_margin = min(report.worst_knudsen_margin, float(dk.min()))
    U0 = np.stack(profile(x), axis=-1)
    allow = lemma_bounds(bounds)
    for i, name in enumerate(("rho", "m", "E")):
        slack = allow[name] - np.abs(U[:, i] - U0[:, i])
        tol = DOMINANCE_RTOL * np.maximum(1.0, np.abs(U0[:, i]))
        report.lemma_violations[name] += int(np.sum(slack < -tol))
        report.worst_lemma_margin[name] = min(report.worst_lemma_margin[name], float(slack.min()))
    report.points += x.size
    return report


@dataclass
class RegionResult:
    x_B: float
    x_star: float | None
    x_star_star: float | None
    sigma_union: tuple | None
    sigma_intersection: tuple | None
    preconditions: dict
    certificates: dict
    notes: list
    bounds: ProfileBounds
    profile_x: np.ndarray
    mach_profile: np.ndarray
    knudsen_profile: np.ndarray
    dominance: DominanceReport | None = None

    def to_json(self):
        def num(v):
            return None if v is None or not np.isfinite(v) else float(v)

        out = {
            "x_star": num(self.x_star),
            "x_star_star": num(self.x_star_star),
            "sigma_union": None if self.sigma_union is None else list(self.sigma_union),
            "sigma_union_label": "as-printed",
            "sigma_intersection": None if self.sigma_intersection is None else list(self.sigma_intersection),
            "preconditions": self.preconditions,
            "certificates": self.certificates,
            "notes": self.notes,
            "bounds": {**asdict(self.bounds), "E_star": self.bounds.E_star, "horizon_truncated": True},
        }
        if self.dominance is not None:
            d = self.dominance
            out["dominance"] = {
                "points": d.points,
                "mach_violations": d.mach_violations,
                "knudsen_violations": d.knudsen_violations,
                "lemma_violations": d.lemma_violations,
                "worst_mach_margin": num(d.worst_mach_margin),
                "worst_knudsen_margin": num(d.worst_knudsen_margin),
                "worst_lemma_margin": {a: num(b) for a, b in d.worst_lemma_margin.items()},
                "ok": d.ok,
            }
        return out


def _sigmas(x_B, xs, xss):
    """Union and intersection of [x_B, x*] and [x_B, x**] (spatial extents)."""
    known = [v for v in (xs, xss) if v is not None]
    if not known:
        return None, None
    union = (x_B, max(known)) if len(known) == 2 else None
    inter = (x_B, min(known)) if len(known) == 2 else None
    return union, inter


def detect_region(profile, bounds, k, *, bracket=None, snapshots=(), samples=SCAN_POINTS):
    """Find x*, x**, both Sigma conventions, and check the bounds on snapshots.

    ``snapshots`` is an iterable of (x, U) pairs.  A missing root leaves the
    radius as None with the reason in ``notes``.  When one radius is missing,
    neither Sigma convention is defined and both are None.
    """
    notes = []
    mono = monotonicity(profile, k)
    kcond = knudsen_condition(profile, k)
    pre = {**asdict(mono), "monotone": mono.all, "knudsen_condition_margin": kcond,
           "knudsen_condition": kcond > 0.0}
    if not mono.all:
        notes.append("monotonicity preconditions fail; bounds are advisory")
    certs = {}
    x_s = x_ss = None
    try:
        x_s = find_x_star(profile, bounds, k, bracket, samples=samples)
        certs["mach_residual"] = float(abs(mach_bound(np.array([x_s]), profile, bounds, k)[0] - 1.0))
    except (NoCrossing, PreconditionFailed) as e:
        notes.append(f"x*: {e}")
    try:
        x_ss = find_x_star_star(profile, bounds, k, bracket, samples=samples)
        certs["knudsen_residual"] = float(abs(knudsen_bound(np.array([x_ss]), profile, bounds, k)[0] - 1.0))
    except (NoCrossing, PreconditionFailed) as e:
        notes.append(f"x**: {e}")
    xs_tab, _ = profile.table(513)
    mb, clamped = mach_bound(xs_tab, profile, bounds, k, with_flag=True)
    if clamped.any():
        notes.append("Mach bound numerator negative at some radii (clamped to 0)")
    pre["mach_bound_clamped"] = bool(clamped.any())
    kb = knudsen_bound(xs_tab, profile, bounds, k)
    pre["mach_bound_nondecreasing"] = bool(np.all(np.diff(mb) >= -1e-14))
    pre["knudsen_bound_nondecreasing"] = bool(np.all(np.diff(kb) >= -1e-14))
    union, inter = _sigmas(profile.x_B, x_s, x_ss)
    dom = None
    snaps = list(snapshots)
    if snaps:
        dom = DominanceReport()
        for x, U in snaps:
            check_snapshot(dom, x, U, profile, bounds, k)
    return RegionResult(profile.x_B, x_s, x_ss, union, inter, pre, certs, notes, bounds, xs_tab, mb, kb, dom)
