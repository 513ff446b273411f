"""Named scenarios used by the CLI, the scripts and the acceptance suite."""

from __future__ import annotations

from .config import (
    BoundaryConfig,
    DiagnosticsConfig,
    GasConfig,
    GridConfig,
    HeatConfig,
    InitialConfig,
    OutputConfig,
    RunConfig,
    ThetaConfig,
    TimeConfig,
)
from .errors import ConfigError


def uniform_supersonic():
    """Uniform Mach-2.5 outflow with gravity and constant boundary data."""
    return RunConfig(
        name="uniform-supersonic",
        grid=GridConfig(1.0, 1.5, 200),
        time=TimeConfig(t_final=0.1),
        gas=GasConfig(gamma=1.4, G_Mp=0.5),
        initial=InitialConfig(kind="uniform", rho=1.0, u=3.0, P=1.0),
        boundary=BoundaryConfig(rho0=1.0, m0=3.0),
    )


def sod_geometric():
    """Sod-type jump moving downstream on a planar domain, no gravity, no heat.

    The base velocity is positive because the boundary needs inflow.
    """
    return RunConfig(
        name="sod-geometric",
        grid=GridConfig(1.0, 2.0, 200),
        time=TimeConfig(t_final=10.0, max_steps=500),
        gas=GasConfig(gamma=1.4, G_Mp=0.0, spherical=False),
        initial=InitialConfig(kind="riemann", rho=1.0, u=0.5, P=1.0, rho_r=0.125, u_r=0.5, P_r=0.1, x_split=1.3),
        boundary=BoundaryConfig(rho0=1.0, m0=0.5),
        output=OutputConfig(snapshot_every=50),
    )


def escape_compliant():
    """Thin transonic shell: Mach 0.97 at the base to 1.04 at the top.

    rho0 and E0 decrease, m0 increases, rho c^2 decreases.  The boundary
    oscillation is sized so that its total variation over the run covers the
    drift of the density away from the initial profile.  The cross-section
    puts the Knudsen radius inside the shell.

    theta uses the base-3 van der Corput sequence.  In base 2 the sign of
    theta alternates every step, so the boundary cell samples the boundary
    fan on every other step only; that parity locks onto the switching of
    the boundary wave pattern and leaves a boundary-flux bias that does not
    shrink under refinement.
    """
    return RunConfig(
        name="escape-compliant",
        grid=GridConfig(1.0, 1.03, 400),
        time=TimeConfig(t_final=0.015, max_steps=2000),
        gas=GasConfig(gamma=1.4, G_Mp=0.5, cross_section=0.115),
        initial=InitialConfig(kind="linear", rho=1.0, drho=-1.0, m=2.2, dm=2.0, P=3.68, dP=-6.0),
        boundary=BoundaryConfig(rho0=1.0, m0=2.2, amp_rho=0.012, amp_m=0.01, period=0.0075),
        theta=ThetaConfig(base=3),
        diagnostics=DiagnosticsConfig(eps_frac=0.05),
        output=OutputConfig(snapshot_every=100),
    )


def heated_escape():
    """Smooth supersonic outflow through a Gaussian heating layer, short time."""
    return RunConfig(
        name="heated-escape",
        grid=GridConfig(1.0, 1.5, 100),
        time=TimeConfig(t_final=0.05),
        gas=GasConfig(gamma=1.4, G_Mp=0.5),
        heat=HeatConfig(kind="gaussian_bump", parameters=(2.0, 1.25, 0.2)),
        initial=InitialConfig(kind="uniform", rho=1.0, u=3.0, P=1.0),
        boundary=BoundaryConfig(rho0=1.0, m0=3.0),
        output=OutputConfig(snapshot_every=50),
    )


PRESETS = {
    "uniform-supersonic": uniform_supersonic,
    "sod-geometric": sod_geometric,
    "escape-compliant": escape_compliant,
    "heated-escape": heated_escape,
}


def preset(name):
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
