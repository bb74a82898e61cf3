"""Trajectory reports: invariants, onset detection and the theory diagnostics."""

from __future__ import annotations

import logging
import math
from dataclasses import replace

import numpy as np

from . import integrator as it
from .collision import KernelTable
from .config import DETECTOR_MASS_FRACTION, SimulationConfig, TheoryParams, build_problem, theory_params
from .errors import ConfigError, StateError
from .integrator import StepControl, Trajectory
from .spectrum import Spectrum, mass
from .theory.growth import (condensation_bound_report, growth_set_measures, level_resolvable,
                            uniform_cadence)
from .theory.supersolution import (INDEX_RULE, build_mu, build_supersolution, estimate_T1,
                                   verify_supersolution)
from .theory.timesets import accumulate_time_measures

logger = logging.getLogger(__name__)

# definition key for every number a report emits
DEFINITIONS = {
    "mass": "reduced mass int F domega plus the condensate",
    "energy": "int omega F domega",
    "phi": "Lyapunov functional int F ln(omega + 1) domega",
    "D": "entropy dissipation rate of the weak form",
    "origin_functional": "int F (L - omega)_+ domega with L = origin_L",
    "dyadic_mass_n": "int_[0, 2**-n) F domega (condensate included)",
    "T0_hat": "first recorded time at which the dyadic detector holds on every level of n_range",
    "measure_digamma2": "left-rectangle measure of sampled times in the spread set with windows Xi_i of [0, R)",
    "measure_digamma_star": "left-rectangle measure of sampled times in the spread set with N sliding windows of [0, m Re)",
    "pumped_integral_digamma2": "left-rectangle int over the spread set of (int_[0,R) F)^3 dt",
    "structural_factor_digamma2": "R**(2 + 2/alpha) (M + E) / (h**2 mho(h) nu**4)",
    "ratio_digamma2": "pumped integral over its structural factor",
    "mass_lower_bound": "(m - 1) M_o / m with M_o the initial mass in [0, Re)",
    "S_n": "times with int_[0, L_n) F >= C_F L_n**varsigma",
    "S_ni": "times with int_Xi_i F >= C_F L_{n+1}**varsigma",
    "U_n": "S_n minus the union of the S_ni",
    "V_n": "union of S_ni over i >= 2**(M0 - 1) - 1",
    "W_n": "union of S_ni over i < 2**(M0 - 1) - 1",
    "gamma": "min(eps - 2 beta - 2 vs, (beta + 2)(eps - shift - 3 vs / (beta + 2)))",
    "bound": "2**(-N0 gamma); the universal constant is factored out",
    "T1": "time at which int_0^T1 (int G)^2 dt reaches its target",
    "A_mu": "int_t^T1 int mu(s, z) z dz ds",
    "B_mu": "C_upsilon int_t^T1 int mu(s, z) z**2 / 2 dz ds",
    "min_residual": "minimum over guarded samples of d_t rho + nonlocal term",
}

CONVENTIONS = {
    "xi_index_rule": INDEX_RULE,
    "mid3_ties": "sorted middle",
    "time_measure": "left-rectangle sum on a uniform record cadence",
    "mu_time_interpolation": "linear in t between records",
    "post_onset_samples": "samples at or after T0_hat lie outside the non-condensation set",
}


def trajectory_from_snapshots(snapshots: list[Spectrum], table: KernelTable, origin_L: float | None = None,
                              with_dissipation: bool = True, record_dt: float | None = None) -> Trajectory:
    """Rebuild the diagnostics records of a stored trajectory."""
    if not snapshots:
        raise StateError("trajectory has no snapshots")
    grid = snapshots[0].grid
    if grid != table.grid:
        raise StateError(f"trajectory grid ({grid.n_cells} cells, h={grid.h_grid}) does not match "
                         f"the configured grid ({table.grid.n_cells} cells, h={table.grid.h_grid})")
    times = np.array([s.t for s in snapshots])
    if np.any(np.diff(times) <= 0):
        raise StateError("trajectory times are not strictly increasing")
    levels = it.dyadic_levels(grid)
    L = grid.omega_max / 4.0 if origin_L is None else origin_L
    records = [it.diagnostics_record(s, table, levels, L, with_dissipation) for s in snapshots]
    return Trajectory(list(snapshots), records, it.HORIZON, record_dt, levels, L)


def invariant_report(traj: Trajectory, slack: float = 1e-9) -> dict:
    """Conservation drift and the monotone functionals along recorded samples."""
    m, e = traj.column("mass"), traj.column("energy")
    phi, org = traj.column("phi"), traj.column("origin_functional")
    out = {
        "max_rel_mass_drift": float(np.max(np.abs(m - m[0])) / m[0]) if m[0] else 0.0,
        "max_rel_energy_drift": float(np.max(np.abs(e - e[0])) / e[0]) if e[0] else 0.0,
        "phi_max_increase": float(np.max(np.diff(phi), initial=0.0)),
        "phi_nonincreasing": bool(np.all(np.diff(phi) <= slack * abs(phi[0]))),
        "origin_functional_max_decrease": float(max(0.0, -np.min(np.diff(org), initial=0.0))),
        "origin_functional_nondecreasing": bool(np.all(np.diff(org) >= -slack * abs(org[0]))),
        "origin_L": traj.origin_L,
        "slack": slack,
    }
    D = traj.column("D")
    if np.all(np.isfinite(D)):
        t = traj.times
        cum = np.concatenate([[0.0], np.cumsum(np.diff(t) * (D[1:] + D[:-1]) / 2.0)])
        out["dissipation_integral"] = float(cum[-1])
        out["dissipation_integral_finite"] = bool(np.isfinite(cum[-1]))
        out["dissipation_integral_nondecreasing"] = bool(np.all(np.diff(cum) >= 0))
        out["phi_drop"] = float(phi[0] - phi[-1])
    return out


def onset_N0(config: SimulationConfig) -> int | None:
    """N0 with r0 = 2**-N0 for a power-concentrated profile, else None."""
    p = config.profile
    if p.kind != "power-concentrated":
        return None
    x = -math.log2(p.r0)
    return int(round(x)) if abs(x - round(x)) < 1e-12 else None


def supersolution_segment(config: SimulationConfig, n: int | None = None, samples: int = 400,
                          horizon_factor: float = 4.0) -> tuple[Trajectory | None, dict]:
    """Re-integrate the configured initial data on a cadence fine enough to resolve T1.

    The horizon is ``horizon_factor`` times the T1 estimate from the initial
    data, sampled ``samples`` times.  Returns (None, reason) when t = 0 is
    outside V_n, in which case mu vanishes initially.
    """
    problem = build_problem(config)
    tp = theory_params(config, mass(problem.initial))
    n = tp.supersolution_level if n is None else n
    if n is None:
        return None, {"skipped": "no dyadic level with hbar_n >= 4 h_grid"}
    T1 = estimate_T1(problem.initial, tp.growth, n, config.model)
    if T1 is None:
        return None, {"skipped": f"initial data outside V_{n}; mu vanishes at t = 0"}
    T = horizon_factor * T1
    dt = T / samples
    ctl = StepControl(dt_init=min(problem.control.dt_init, dt), dt_min=1e-16, safety=problem.control.safety,
                      t_end=T, record_dt=dt, dt_max=dt, cons_tol=problem.control.cons_tol)
    traj = it.integrate(problem.initial, problem.table, ctl, None, with_dissipation=False)
    return traj, {"n": n, "T1_estimate": T1, "horizon": T, "cadence": dt}


def supersolution_section(traj: Trajectory, tp: TheoryParams, model, n: int | None = None) -> dict:
    n = tp.supersolution_level if n is None else n
    if n is None:
        return {"skipped": "no dyadic level with hbar_n >= 4 h_grid"}
    grid = traj.grid
    ok, why = level_resolvable(tp.growth, n, grid.h_grid, grid.omega_max, min_cells=4)
    if not ok:
        return {"skipped": why}
    mu = build_mu(traj, tp.growth, n, model)
    art = build_supersolution(mu)
    chk = verify_supersolution(art, mu)
    out = {"artifacts": art.as_dict(), "check": chk.as_dict()}
    out["vacuous"] = chk.evaluated == 0
    out["passed"] = bool(chk.passed and chk.evaluated > 0)
    return out


def diagnose(traj: Trajectory, config: SimulationConfig) -> dict:
    """Full report: invariants, onset, time sets, growth sets, supersolution, onset bound."""
    grid = traj.grid
    tp = theory_params(config, traj.records[0]["mass"])
    det = config.detector
    C_F = det.C_F if det.C_F is not None else DETECTOR_MASS_FRACTION * traj.records[0]["mass"]
    n_range = det.n_range or it.default_n_range(grid)
    report: dict = {
        "definitions": DEFINITIONS,
        "conventions": CONVENTIONS,
        "run": {
            "samples": len(traj.snapshots), "t_first": float(traj.times[0]), "t_last": float(traj.times[-1]),
            "n_cells": grid.n_cells, "omega_max": grid.omega_max, "h_grid": grid.h_grid,
            "alpha": config.model.alpha, "beta": config.model.beta, "dyadic_levels": traj.dyadic_n,
        },
        "invariants": invariant_report(traj),
    }
    T0 = it.detect_condensation(traj, C_F, det.varsigma, n_range)
    report["condensation"] = {"T0_hat": T0, "C_F": C_F, "varsigma": det.varsigma, "n_range": list(n_range)}

    try:
        cadence = uniform_cadence(traj.times)
    except StateError as exc:
        cadence = None
        report["time_sets"] = {"skipped": str(exc)}
        report["growth_sets"] = {"skipped": str(exc)}
    if cadence is not None:
        tm = accumulate_time_measures(traj, tp.spec, tp.nu, tp.N, tp.theta, tp.m, tp.Re, config.model,
                                      condensation_time=T0)
        report["time_sets"] = tm.as_dict()
        gs = {}
        for n in tp.growth_levels:
            rep = growth_set_measures(traj, tp.growth, n)
            if rep is None:
                continue
            d = rep.as_dict()
            union = rep.S_ni.any(axis=1)
            d["set_algebra_ok"] = bool(not np.any(rep.U & union) and np.array_equal(rep.V | rep.W, union))
            gs[f"n{n}"] = d
        report["growth_sets"] = gs

    try:
        report["supersolution"] = supersolution_section(traj, tp, config.model)
    except ConfigError as exc:
        report["supersolution"] = {"skipped": str(exc)}

    N0 = onset_N0(config)
    N0_list = list(tp.N0)
    if N0 is not None and N0 not in N0_list:
        N0_list.append(N0)
    estimates = [T0 if k == N0 else None for k in N0_list]
    try:
        report["condensation_bound"] = condensation_bound_report(tp.growth, N0_list, estimates)
    except ConfigError as exc:
        report["condensation_bound"] = {"skipped": str(exc)}
    report["growth_params"] = {
        "alpha": tp.growth.alpha, "beta": tp.growth.beta, "epsilon": tp.growth.epsilon,
        "epsilon_window": list(tp.growth.epsilon_window()), "varsigma": tp.growth.varsigma,
        "varsigma_max": tp.growth.varsigma_max(), "C_F": tp.growth.C_F, "gamma": tp.growth.gamma(),
    }
    return report


def run_config(config: SimulationConfig, **step_changes) -> Trajectory:
    """Integrate a config, optionally overriding step-control fields."""
    problem = build_problem(config)
    control = replace(problem.control, **step_changes) if step_changes else problem.control
    return it.integrate(problem.initial, problem.table, control, problem.detector,
                        with_dissipation=config.diagnostics.record_dissipation)
