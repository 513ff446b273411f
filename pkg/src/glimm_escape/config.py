"""Run configuration: dataclass sections, a flat ``section.key = value`` parser,
and the numeric compliance report for the positivity hypotheses (A1)-(A3)."""

from __future__ import annotations

import ast
import dataclasses
import math
import os
import typing
from dataclasses import dataclass, field

import numpy as np

from . import euler
from .errors import ConfigError
from .glimm import BoundaryData, Grid, RandomSequence, initial_solution


@dataclass
class GridConfig:
    x_B: float = 1.0
    x_max: float = 2.0
    n_cells: int = 400


@dataclass
class TimeConfig:
    t_final: float = 1.0
    cfl_safety: float = 0.9
    max_steps: int | None = None


@dataclass
class GasConfig:
    gamma: float = 1.4
    G_Mp: float = 0.0
    molecular_mass: float = 1.0
    cross_section: float = 1.0
    boltzmann: float = 1.0
    spherical: bool = True


@dataclass
class HeatConfig:
    kind: str = "zero"
    parameters: tuple = ()


@dataclass
class InitialConfig:
    """Initial data.

    uniform:   (rho, u, P) everywhere
    linear:    rho + drho s, m + dm s, P + dP s with s = x - x_B
    riemann:   (rho, u, P) left of x_split, (rho_r, u_r, P_r) right of it
    tabulated: CSV file with columns x, rho, m, E (snapshot format)
    """

    kind: str = "uniform"
    rho: float = 1.0
    u: float = 1.0
    P: float = 1.0
    m: float = 1.0
    drho: float = 0.0
    dm: float = 0.0
    dP: float = 0.0
    rho_r: float = 0.125
    u_r: float = 0.0
    P_r: float = 0.1
    x_split: float | None = None
    file: str = ""


@dataclass
class BoundaryConfig:
    kind: str = "modulated"
    rho0: float = 1.0
    m0: float = 1.0
    amp_rho: float = 0.0
    amp_m: float = 0.0
    period: float = 1.0
    phase: float = 0.0
    file: str = ""  # CSV t, rho_B, m_B for kind "tabulated"


@dataclass
class SchemeConfig:
    coupling: str = "contraction"  # contraction | classical | splitting
    rho_floor: float = 0.0
    require_positive_velocity: bool = False


@dataclass
class ThetaConfig:
    kind: str = "van_der_corput"
    seed: int = 0
    base: int = 2


@dataclass
class DiagnosticsConfig:
    enabled: bool = True
    K: float | None = None
    K1: float = 2.0
    eps_frac: float = 0.1
    residuals: bool = False


@dataclass
class RegionConfig:
    enabled: bool = True
    bracket_hi: float | None = None


@dataclass
class OutputConfig:
    dir: str = "out"
    snapshot_every: int = 100


@dataclass
class RunConfig:
    name: str = "custom"
    grid: GridConfig = field(default_factory=GridConfig)
    time: TimeConfig = field(default_factory=TimeConfig)
    gas: GasConfig = field(default_factory=GasConfig)
    heat: HeatConfig = field(default_factory=HeatConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    boundary: BoundaryConfig = field(default_factory=BoundaryConfig)
    scheme: SchemeConfig = field(default_factory=SchemeConfig)
    theta: ThetaConfig = field(default_factory=ThetaConfig)
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)
    region: RegionConfig = field(default_factory=RegionConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    base_dir: str = ""  # relative file paths resolve against this

    # -- builders ---------------------------------------------------------
    def gas_constants(self):
        g = self.gas
        return euler.GasConstants(g.gamma, g.G_Mp, g.molecular_mass, g.cross_section, g.boltzmann, g.spherical)

    def heat_profile(self):
        return euler.HeatProfile(self.heat.kind, tuple(self.heat.parameters))

    def grid_(self):
        return Grid.uniform(self.grid.x_B, self.grid.x_max, self.grid.n_cells)

    def path(self, p):
        return p if os.path.isabs(p) or not self.base_dir else os.path.join(self.base_dir, p)

    def boundary_data(self):
        b = self.boundary
        if b.kind == "tabulated":
            t, r, m = _read_columns(self.path(b.file), 3)
            return BoundaryData(kind="tabulated", table=(tuple(t), tuple(r), tuple(m)))
        return BoundaryData(b.kind, b.rho0, b.m0, b.amp_rho, b.amp_m, b.period, b.phase)

    def sequence(self, seed=None):
        return RandomSequence(self.theta.kind, self.theta.seed if seed is None else int(seed), self.theta.base)

    def conserved_profile(self):
        """Callable x -> (rho0, m0, E0) arrays."""
        k = self.gas_constants()
        prim = self.primitive_profile()

        def fn(x):
            rho, u, P = prim(x)
            U = euler.to_conserved(np.stack(np.broadcast_arrays(rho, u, P), axis=-1), k)
            return U[..., 0], U[..., 1], U[..., 2]

        return fn

    def primitive_profile(self):
        """Callable x -> (rho, u, P) arrays."""
        i = self.initial
        x_B = self.grid.x_B
        if i.kind == "uniform":
            return lambda x: tuple(np.full_like(np.asarray(x, float), v) for v in (i.rho, i.u, i.P))
        if i.kind == "linear":
            def lin(x):
                s = np.asarray(x, float) - x_B
                rho = i.rho + i.drho * s
                return rho, (i.m + i.dm * s) / rho, i.P + i.dP * s
            return lin
        if i.kind == "riemann":
            xs = i.x_split if i.x_split is not None else 0.5 * (x_B + self.grid.x_max)

            def rp(x):
                left = np.asarray(x, float) < xs
                return (np.where(left, i.rho, i.rho_r), np.where(left, i.u, i.u_r), np.where(left, i.P, i.P_r))
            return rp
        if i.kind == "tabulated":
            k = self.gas_constants()
            xt, r, m, E = _read_columns(self.path(i.file), 4)
            U = np.stack([r, m, E], axis=-1)
            W = euler.to_primitive(U, k)

            def tab(x):
                return tuple(np.interp(x, xt, W[:, j]) for j in range(3))
            return tab
        raise ConfigError(f"unknown initial kind {i.kind!r}")

    def initial_solution(self):
        return initial_solution(self.grid_(), self.primitive_profile(), self.gas_constants())

    def replace(self, **sections):
        return dataclasses.replace(self, **sections)

    def refined(self, factor):
        """Same problem with n_cells and max_steps scaled by ``factor``."""
        g = dataclasses.replace(self.grid, n_cells=int(round(self.grid.n_cells * factor)))
        t = self.time
        if t.max_steps is not None:
            t = dataclasses.replace(t, max_steps=int(round(t.max_steps * factor)))
        return dataclasses.replace(self, grid=g, time=t)


def _read_columns(path, ncols):
    if not os.path.exists(path):
        raise ConfigError(f"file not found: {path}")
    data = np.genfromtxt(path, delimiter=",", names=True, dtype=float)
    arr = np.column_stack([data[n] for n in data.dtype.names[:ncols]])
    return tuple(arr[:, j] for j in range(ncols))


# ---------------------------------------------------------------------------
# parsing

SECTIONS = [f.name for f in dataclasses.fields(RunConfig) if f.name not in ("name", "base_dir")]


def _convert(text, tp, key):
    """Convert a raw value to the field's annotated type."""
    hints = typing.get_args(tp) or (tp,)
    optional = type(None) in hints
    base = next((h for h in hints if h is not type(None)), str)
    t = text.strip()
    if optional and t.lower() in ("none", "null", ""):
        return None
    try:
        if base is bool:
            if t.lower() in ("true", "yes", "1", "on"):
                return True
            if t.lower() in ("false", "no", "0", "off"):
                return False
            raise ValueError(t)
        if base is int:
            return int(t)
        if base is float:
            return float(t)
        if base is tuple:
            v = ast.literal_eval(t if t.startswith(("(", "[")) else f"({t},)")
            return tuple(float(a) for a in v)
        return t.strip("\"'")
    except (ValueError, SyntaxError) as e:
        raise ConfigError(f"bad value for {key}: {text!r}") from e


def _section_types(cls):
    return typing.get_type_hints(cls)


def apply_overrides(cfg, pairs):
    """Apply ``section.key = value`` strings to a RunConfig, returning a new one."""
    sections = {s: dataclasses.asdict(getattr(cfg, s)) for s in SECTIONS}
    top = {"name": cfg.name, "base_dir": cfg.base_dir}
    for key, value in pairs:
        if "." not in key:
            if key in top:
                top[key] = value.strip()
                continue
            raise ConfigError(f"key {key!r} needs a section prefix")
        sec, name = key.split(".", 1)
        if sec not in sections:
            raise ConfigError(f"unknown section {sec!r}")
        cls = type(getattr(cfg, sec))
        types = _section_types(cls)
        if name not in types:
            raise ConfigError(f"unknown key {key!r}")
        sections[sec][name] = _convert(value, types[name], key)
    built = {s: type(getattr(cfg, s))(**v) for s, v in sections.items()}
    return RunConfig(name=top["name"], base_dir=top["base_dir"], **built)


def parse_text(text, base=None):
    """Parse flat ``section.key = value`` lines; ``#`` starts a comment.

    A ``preset = NAME`` line (first) starts from that preset.
    """
    from .presets import preset

    pairs = []
    start = base if base is not None else RunConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "preset":
            if pairs:
                raise ConfigError("preset must come before other keys")
            start = preset(value)
            continue
        pairs.append((key, value))
    return apply_overrides(start, pairs)


def load(path):
    with open(path) as fh:
        cfg = parse_text(fh.read())
    if not cfg.base_dir:
        cfg = dataclasses.replace(cfg, base_dir=os.path.dirname(os.path.abspath(path)))
    return cfg


def dump(cfg):
    """Flat text form; parse_text(dump(c)) == c."""
    lines = [f"name = {cfg.name}"]
    for s in SECTIONS:
        for k, v in dataclasses.asdict(getattr(cfg, s)).items():
            if isinstance(v, tuple):
                v = "(" + ", ".join(repr(float(a)) for a in v) + ("," if len(v) == 1 else "") + ")"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{s}.{k} = {v}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# validation

@dataclass
class Compliance:
    A1: bool
    A2: bool
    A3: bool
    a2_margin: float
    varrho: float  # density floor certified from the data before the run
    varrho_data: float  # min of rho0 and rho_B, the largest floor the data allow
    tv0: float
    tv_components: tuple
    m_star: float
    stability_constant: float
    eps_frac: float
    warnings: list

    @property
    def compliant(self):
        return self.A1 and self.A2 and self.A3

    def to_json(self):
        d = dataclasses.asdict(self)
        d["compliant"] = self.compliant
        d["tv_components"] = list(self.tv_components)
        return d


BOUNDARY_SAMPLES = 20001


def _structural(cfg):
    g, t, gas, s = cfg.grid, cfg.time, cfg.gas, cfg.scheme
    if not gas.gamma > 1.0:
        raise ConfigError("gamma must exceed 1")
    if gas.G_Mp < 0.0 or gas.molecular_mass <= 0.0 or gas.cross_section <= 0.0:
        raise ConfigError("G_Mp must be nonnegative, mass and cross-section positive")
    if not (g.x_B > 0.0 and g.x_max > g.x_B):
        raise ConfigError("need 0 < x_B < x_max")
    if g.n_cells < 1:
        raise ConfigError("need at least one cell")
    if not t.t_final > 0.0 or not (0.0 < t.cfl_safety < 1.0):
        raise ConfigError("need t_final > 0 and 0 < cfl_safety < 1")
    if t.max_steps is not None and t.max_steps < 1:
        raise ConfigError("max_steps must be positive")
    if s.coupling not in ("contraction", "classical", "splitting"):
        raise ConfigError(f"unknown coupling {s.coupling!r}")
    if cfg.output.snapshot_every < 1:
        raise ConfigError("snapshot_every must be positive")
    if not (0.0 < cfg.diagnostics.eps_frac < 0.5):
        raise ConfigError("eps_frac must lie in (0, 1/2)")


def validate(cfg):
    """Structural checks (fatal, ConfigError) and the (A1)-(A3) report (warnings)."""
    from .diagnostics import a2_margin, stability_constant

    _structural(cfg)
    try:
        k = cfg.gas_constants()
        q = cfg.heat_profile()
        bd = cfg.boundary_data()
        sol = cfg.initial_solution()
        RandomSequence(cfg.theta.kind, cfg.theta.seed, cfg.theta.base)
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(str(e)) from e
    warnings = []
    U0 = sol.states
    tvc = tuple(float(v) for v in np.abs(np.diff(U0, axis=0)).sum(axis=0))
    tv0 = float(sum(tvc))
    rb_lo, rb_hi, mb_lo, mb_hi = bd.bounds()
    varrho_data = float(min(U0[:, 0].min(), rb_lo))
    # drift bound |rho - rho0| <= TV{rho0} + TV{rho_B} over the run horizon
    ts = np.linspace(0.0, cfg.time.t_final, BOUNDARY_SAMPLES)
    tv_rhoB = float(np.abs(np.diff(np.asarray(bd(ts)[0], dtype=float) * np.ones_like(ts))).sum())
    varrho = float(min(varrho_data, U0[:, 0].min() - tvc[0] - tv_rhoB))
    A1 = bool(np.all(U0 > 0.0) and rb_lo > 0.0 and mb_lo > 0.0)
    if not A1:
        warnings.append("(A1) initial or boundary data not positive")
    elif not varrho > 0.0:
        warnings.append("(A1) the data do not certify a positive density floor")
    c0 = euler.sound_speed(U0, k)
    x_B = cfg.grid.x_B
    qp = q.prime_l1(x_B) if k.spherical else 0.0
    min_uB = mb_lo / rb_hi if rb_hi > 0 else 0.0
    if min_uB > 0.0:
        C = stability_constant(cfg.diagnostics.eps_frac, k.gamma, min_uB, max(U0[:, 1].max(), mb_hi),
                               max(U0[:, 0].max(), rb_hi), float(c0.min()), x_B, k.G_Mp, qp)
    else:
        C = math.inf
    margin = a2_margin(mb_lo, cfg.diagnostics.eps_frac, tv0, C)
    A2 = bool(margin > 0.0)
    if not A2:
        warnings.append(f"(A2) margin {margin:.6g} is not positive")
    A3 = bool(math.isfinite(q.l1_norm(x_B)) and math.isfinite(q.prime_l1(x_B)))
    if not A3:
        warnings.append("(A3) heat profile not in W^{1,1}")
    return Compliance(A1, A2, A3, float(margin), varrho, varrho_data, tv0, tvc, float(mb_lo), float(C),
                      cfg.diagnostics.eps_frac, warnings)
