"""Run orchestration: single runs with diagnostics and outputs, refinement
studies, and the comparison against the fractional-step scheme."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics as dg
from . import io
from . import region as rg
from .config import dump, validate
from .glimm import march

CONTINUITY_SUBSAMPLE = 64


@dataclass
class RunResult:
    config: object
    compliance: object
    final: object
    times: np.ndarray
    states: list  # every level, including the initial one
    boundary_rows: list
    lambda_star: float
    dt_max: float
    summary: dict
    diagnostics: object = None  # RunSummary
    reports: list = field(default_factory=list)
    region: object = None  # RegionResult
    residuals: dict = field(default_factory=dict)


def simulate(cfg, *, seed=None, coupling=None, on_record=None, keep_states=True):
    """March a validated config to the end; returns (final, times, states, boundary_rows)."""
    k = cfg.gas_constants()
    q = cfg.heat_profile()
    bd = cfg.boundary_data()
    sol = cfg.initial_solution()
    times, states, rows = [sol.time], [sol.states] if keep_states else [], []
    last = sol
    for rec in march(sol, bd, q, k, cfg.sequence(seed), t_final=cfg.time.t_final, max_steps=cfg.time.max_steps,
                     safety=cfg.time.cfl_safety, coupling=coupling or cfg.scheme.coupling,
                     rho_floor=cfg.scheme.rho_floor, require_positive_velocity=cfg.scheme.require_positive_velocity):
        if on_record is not None:
            on_record(rec)
        rows.append((rec.before.step, rec.before.time, rec.boundary_input[0], rec.boundary_input[1],
                     rec.boundary_fan.E_B, rec.dt))
        times.append(rec.after.time)
        if keep_states:
            states.append(rec.after.states)
        last = rec.after
    return last, np.array(times), states, rows


def continuity_estimate(times, states, dx, dt):
    """L1 time-continuity constant from consecutive levels and a subsample of all pairs."""
    S = np.asarray(states)
    T = np.asarray(times)
    d = np.abs(np.diff(S, axis=0)).sum(axis=(1, 2)) * 2.0 * dx
    best = float(np.max(d / (np.diff(T) + dt))) if d.size else 0.0
    idx = np.unique(np.linspace(0, len(T) - 1, min(len(T), CONTINUITY_SUBSAMPLE)).round().astype(int))
    return max(best, dg.continuity_constant(T[idx], S[idx], dx, dt))


def _residual_accumulators(cfg, k, q):
    grid = cfg.grid_()
    tests = dg.standard_tests(cfg.grid.x_B, cfg.grid.x_max, cfg.time.t_final)
    weak = dg.ResidualAccumulator(tests, grid, q, k)
    ent = dg.ResidualAccumulator(tests, grid, q, k, dg.EntropyPair())
    return tests, weak, ent


def run_scenario(cfg, out_dir=None, *, seed=None, region=None):
    """Run one scenario with diagnostics; optionally write all artifacts to out_dir."""
    compliance = validate(cfg)
    if seed is not None:
        cfg = dataclasses.replace(cfg, theta=dataclasses.replace(cfg.theta, seed=int(seed)))
    k = cfg.gas_constants()
    q = cfg.heat_profile()
    bd = cfg.boundary_data()
    grid = cfg.grid_()
    dcfg = cfg.diagnostics
    rd = dg.RunDiagnostics(grid, q, k, K=dcfg.K, K1=dcfg.K1) if dcfg.enabled else None
    tests = weak = ent = None
    if dcfg.residuals:
        tests, weak, ent = _residual_accumulators(cfg, k, q)
        U0 = cfg.initial_solution().states
        weak.add_initial(U0)
        ent.add_initial(U0)
    snaps = []
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "config.txt"), "w") as fh:
            fh.write(dump(cfg))
        io.write_json(os.path.join(out_dir, "validation.json"), compliance.to_json())
        io.write_snapshot(os.path.join(out_dir, io.snapshot_name(0)), grid.centers, cfg.initial_solution().states,
                          k, t=0.0, step=0)

    every = cfg.output.snapshot_every

    def on_record(rec):
        if rd is not None:
            rd.add(rec)
        if weak is not None:
            weak.add_record(rec)
            ent.add_record(rec)
        if out_dir is not None and rec.after.step % every == 0:
            io.write_snapshot(os.path.join(out_dir, io.snapshot_name(rec.after.step)), grid.centers,
                              rec.after.states, k, t=rec.after.time, step=rec.after.step)
            snaps.append(rec.after.step)

    try:
        final, times, states, rows = simulate(cfg, on_record=on_record)
    except Exception as e:
        if out_dir is not None:
            io.write_json(os.path.join(out_dir, "summary.json"),
                          {"name": cfg.name, "error": type(e).__name__, "message": str(e)})
        raise
    if out_dir is not None and (not snaps or snaps[-1] != final.step) and final.step > 0:
        io.write_snapshot(os.path.join(out_dir, io.snapshot_name(final.step)), grid.centers, final.states, k,
                          t=final.time, step=final.step)

    dts = np.array([r[5] for r in rows]) if rows else np.array([np.inf])
    lambda_star = float(grid.dx / dts.max()) if rows else float("inf")
    dt_max = float(dts.max()) if rows else 0.0
    tv_levels = np.array([dg.total_variation(S)[1] for S in states])
    tv0 = float(tv_levels[0])
    u_min = min(float(np.min(S[:, 1] / S[:, 0])) for S in states)
    rho_min = min(float(S[:, 0].min()) for S in states)
    summary = {
        "name": cfg.name,
        "steps": int(final.step),
        "t_final": float(final.time),
        "n_cells": cfg.grid.n_cells,
        "dx": grid.dx,
        "lambda_star": lambda_star,
        "dt_max": dt_max,
        "compliance": compliance.to_json(),
        "min_u_cells": u_min,
        "min_rho_cells": rho_min,
        "varrho": compliance.varrho,
        "varrho_data": compliance.varrho_data,
        "tv0": tv0,
        "tv_max": float(tv_levels.max()),
        "continuity_constant": continuity_estimate(times, states, grid.dx, dt_max) if len(states) > 1 else 0.0,
    }
    result = RunResult(cfg, compliance, final, times, states, rows, lambda_star, dt_max, summary)

    if rd is not None and rows:
        S = rd.finish(bd)
        rB = np.array([r[2] for r in rows])
        mB = np.array([r[3] for r in rows])
        min_uB = float(np.min(mB / rB))
        eps = dcfg.eps_frac
        qp = q.prime_l1(cfg.grid.x_B) if k.spherical else 0.0
        C = dg.stability_constant(eps, k.gamma, min_uB, rd.max_m, rd.max_rho, rd.min_c, cfg.grid.x_B, k.G_Mp, qp) \
            if min_uB > 0.0 else float("inf")
        window = dg.k_window(S.C_prime, eps, tv0, C, K=dcfg.K)
        S = rd.with_K(window.K)
        bound = dg.tv_bound(eps, tv0, C)
        per_i = np.append(S.per_step_interaction_violations, 0)
        per_b = np.append(S.per_step_boundary_violations, 0)
        reports = []
        for n, lv in enumerate(S.levels):
            reports.append({
                "step": int(lv.step), "t": float(lv.t), "L": float(S.L[n]), "Q": float(S.Q[n]), "F": float(S.F[n]),
                "K": float(S.K), "tv": float(lv.tv), "min_u": lv.min_u, "min_rho": lv.min_rho,
                "max_wave_speed": float(lv.max_wave_speed),
                "interaction_violations": int(per_i[n]), "boundary_violations": int(per_b[n]),
            })
        result.diagnostics = S
        result.reports = reports
        summary.update({
            "min_u_visited": rd.min_u_visited,
            "min_rho_visited": rd.min_rho_visited,
            "stability_constant": C,
            "tv_bound": bound,
            "tv_bound_ok": bool(tv_levels.max() <= bound),
            "a2_margin_run": dg.a2_margin(float(mB.min()), eps, tv0, C),
            "K": S.K, "K1": S.K1,
            "K_window": dataclasses.asdict(window) | {"empty": window.empty},
            "C_prime": S.C_prime,
            "interaction_violations": S.interaction_violations,
            "interaction_diamonds": S.interaction_diamonds,
            "interaction_max_zero_d_slack": S.interaction_max_zero_d_slack,
            "boundary_C": S.boundary_C,
            "boundary_violations": S.boundary_violations,
            "decay_constant": S.decay_constant,
            "decay_violations": S.decay_violations,
            "F_first": float(S.F[0]), "F_last": float(S.F[-1]),
        })

    if weak is not None:
        w, wscale, _ = weak.result()
        e, escale, _ = ent.result()
        result.residuals = {
            "tests": [t.name for t in tests],
            "weak": w.tolist(), "weak_scale": wscale.tolist(),
            "entropy": ent.residual[:, 0].tolist(), "entropy_scale": escale.tolist(),
        }
        summary["residuals"] = result.residuals

    do_region = cfg.region.enabled if region is None else region
    if do_region and rows and k.spherical:
        result.region = region_from_run(cfg, rows, states, lambda_star, final.time)
        rj = result.region.to_json()
        summary["region"] = {key: rj[key] for key in ("x_star", "x_star_star", "sigma_union", "sigma_intersection")}
        summary["region"]["dominance_ok"] = rj.get("dominance", {}).get("ok")

    if out_dir is not None:
        io.write_boundary(os.path.join(out_dir, "boundary.csv"), rows)
        if result.reports:
            io.write_reports(os.path.join(out_dir, "diagnostics.jsonl"), result.reports)
        if result.region is not None:
            io.write_json(os.path.join(out_dir, "region.json"), result.region.to_json())
        io.write_json(os.path.join(out_dir, "summary.json"), summary)
    return result


def region_from_run(cfg, rows, states, lambda_star, horizon):
    k = cfg.gas_constants()
    profile = rg.InitialProfile(cfg.conserved_profile(), cfg.grid.x_B, cfg.grid.x_max)
    bounds = rg.profile_bounds(profile, k, q=cfg.heat_profile(), boundary_rho=[r[2] for r in rows],
                               boundary_m=[r[3] for r in rows], boundary_E=[r[4] for r in rows],
                               lambda_star=lambda_star, horizon=horizon)
    hi = cfg.region.bracket_hi if cfg.region.bracket_hi is not None else cfg.grid.x_max
    x = cfg.grid_().centers
    return rg.detect_region(profile, bounds, k, bracket=(cfg.grid.x_B, hi), snapshots=((x, S) for S in states))


def region_from_directory(directory):
    """Region report from a run directory written by run_scenario (its stored snapshots only)."""
    from .config import load

    cfg = load(os.path.join(directory, "config.txt"))
    b = io.read_boundary(os.path.join(directory, "boundary.csv"))
    rows = list(zip(b["step"], b["t"], b["rho_B"], b["m_B"], b["E_B"], b["dt"]))
    states = []
    horizon = float(b["t"][-1] + b["dt"][-1]) if len(rows) else 0.0
    for path in io.list_snapshots(directory):
        _, U, _ = io.read_snapshot(path)
        states.append(U)
    dx = cfg.grid_().dx
    lam = float(dx / np.max(b["dt"])) if len(rows) else float("inf")
    return region_from_run(cfg, rows, states, lam, horizon)


# ---------------------------------------------------------------------------
# studies

def coarsen(U, factor):
    """Average groups of ``factor`` fine cells onto the coarse grid."""
    U = np.asarray(U, dtype=float)
    return U.reshape(-1, factor, U.shape[-1]).mean(axis=1)


def fixed_time(cfg):
    """Drop the step cap so every level ends at t_final."""
    return dataclasses.replace(cfg, time=dataclasses.replace(cfg.time, max_steps=None))


def level_configs(cfg, levels, factor=2):
    base = fixed_time(cfg)
    return [base.refined(factor**i) for i in range(levels)]


def convergence_study(cfg, levels, *, factor=2, residuals=True):
    """Refine by ``factor`` per level; L1 differences of consecutive levels and residuals."""
    rows = []
    prev = None
    for i, c in enumerate(level_configs(cfg, levels, factor)):
        validate(c)
        k, q = c.gas_constants(), c.heat_profile()
        acc = None
        if residuals:
            tests, weak, ent = _residual_accumulators(c, k, q)
            sol0 = c.initial_solution()
            weak.add_initial(sol0.states)
            ent.add_initial(sol0.states)

            def on_record(rec, weak=weak, ent=ent):
                weak.add_record(rec)
                ent.add_record(rec)
            acc = (tests, weak, ent)
        else:
            on_record = None
        final, times, _, brows = simulate(c, on_record=on_record, keep_states=False)
        grid = c.grid_()
        row = {"level": i, "n_cells": c.grid.n_cells, "dx": grid.dx, "steps": final.step, "t": final.time}
        if prev is not None:
            row["l1_to_previous"] = dg.l1_distance(coarsen(final.states, factor), prev.states, prev.grid.dx)
        if acc is not None:
            tests, weak, ent = acc
            w, wscale, _ = weak.result()
            ent.result()
            row["weak_residual"] = w.tolist()
            row["weak_scale"] = wscale.tolist()
            row["entropy_residual"] = ent.residual[:, 0].tolist()
            row["entropy_scale"] = ent.scale[:, 0].tolist()
            row["tests"] = [t.name for t in tests]
        rows.append(row)
        prev = final
    for a, b in zip(rows[1:], rows[2:]):
        b["l1_ratio"] = a["l1_to_previous"] / b["l1_to_previous"] if b["l1_to_previous"] > 0 else float("inf")
    return rows


def compare_oracle(cfg, levels, *, factor=2):
    """Generalized Glimm against the fractional-step scheme at equal theta sequences."""
    rows = []
    for i, c in enumerate(level_configs(cfg, levels, factor)):
        validate(c)
        glimm, *_ = simulate(c, coupling="contraction", keep_states=False)
        split, *_ = simulate(c, coupling="splitting", keep_states=False)
        dx = c.grid_().dx
        dist = dg.l1_distance(glimm.states, split.states, dx)
        norm = float(np.abs(split.states).sum() * 2.0 * dx)
        rows.append({"level": i, "n_cells": c.grid.n_cells, "t": glimm.time, "steps_glimm": glimm.step,
                     "steps_splitting": split.step, "l1_distance": dist, "relative_l1": dist / norm})
    return rows
