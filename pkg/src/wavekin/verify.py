"""Property suite run by ``wavekin verify``: each suite returns a pass/fail result with details."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import collision, integrator as it
from .config import SimulationConfig, theory_params
from .integrator import DtUnderflow
from .spectrum import Grid, ProfileSpec, Spectrum, energy, init_from_profile, lyapunov_phi, mass, test_functional
from .theory.decomposition import DecompositionSpec, inclusion_check, index_level_check

SUITES = ("conservation", "lyapunov", "equilibria", "oracle", "min_kernel", "inclusion", "supersolution")


@dataclass
class SuiteResult:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0
    skipped: str = ""

    def as_dict(self) -> dict:
        out = {"suite": self.name, "passed": self.passed, "seconds": round(self.seconds, 3),
               "details": self.details}
        if self.skipped:
            out["skipped"] = self.skipped
        return out


def bump_spectrum(grid: Grid) -> Spectrum:
    w = grid.omega_max
    return init_from_profile(grid, ProfileSpec("gaussian-bump", center=0.5 * w, width=0.1 * w, mass=1.0))


def lower_half_spectrum(grid: Grid, rng: np.random.Generator) -> Spectrum:
    """Random spectrum supported on [0, omega_max / 2), where truncation cannot flip the weak-form signs."""
    F = rng.random(grid.n_cells)
    F[grid.n_cells // 2:] = 0.0
    return Spectrum(grid, F)


def conservation_run(model, n: int = 64, steps: int = 1000, omega_max: float = 1.0,
                     cfl: float = 0.2) -> dict:
    """Fixed-count SSP-RK3 run from a bump; per-step drifts and monotone functionals."""
    grid = Grid.from_omega_max(n, omega_max)
    table = collision.build_kernel_table(grid, model)
    s = bump_spectrum(grid)
    dt = it.suggest_dt(s, table, cfl)
    L = omega_max / 4.0
    m0, e0 = mass(s), energy(s)
    phi = [lyapunov_phi(s)]
    org = [test_functional(s, lambda w: np.maximum(L - w, 0.0))]
    worst_m = worst_e = 0.0
    retries = 0
    for _ in range(steps):
        res = it.step(s, table, dt)
        retries += res.retries
        s = res.spectrum
        worst_m = max(worst_m, abs(mass(s) - m0) / m0)
        worst_e = max(worst_e, abs(energy(s) - e0) / e0)
        phi.append(lyapunov_phi(s))
        org.append(test_functional(s, lambda w: np.maximum(L - w, 0.0)))
    phi, org = np.array(phi), np.array(org)
    return {
        "n": n, "alpha": model.alpha, "steps": steps, "dt": dt, "t_final": s.t, "retries": retries,
        "max_rel_mass_drift": worst_m, "max_rel_energy_drift": worst_e,
        "phi": phi, "origin_functional": org,
        "phi_max_increase": float(np.max(np.diff(phi))),
        "origin_functional_max_decrease": float(max(0.0, -np.min(np.diff(org)))),
        "phi_drop": float(phi[0] - phi[-1]),
    }


def _timed(name, fn) -> SuiteResult:
    t0 = time.perf_counter()
    try:
        res = fn()
    except DtUnderflow as exc:
        res = SuiteResult(name, False, {"error": str(exc)})
    res.seconds = time.perf_counter() - t0
    return res


def suite_conservation(config: SimulationConfig, steps: int = 1000, tol: float = 1e-10) -> SuiteResult:
    r = conservation_run(config.model, 64, steps, config.grid.omega_max)
    slack = 1e-9
    ok_phi = r["phi_max_increase"] <= slack * abs(r["phi"][0])
    ok_org = r["origin_functional_max_decrease"] <= slack * abs(r["origin_functional"][0])
    passed = r["max_rel_mass_drift"] <= tol and r["max_rel_energy_drift"] <= tol and ok_phi and ok_org
    det = {k: v for k, v in r.items() if k not in ("phi", "origin_functional")}
    det.update({"tol": tol, "phi_nonincreasing": ok_phi, "origin_functional_nondecreasing": ok_org})
    return SuiteResult("conservation", passed, det)


def suite_lyapunov(config: SimulationConfig, count: int = 100, n: int = 32, tol: float = 1e-12) -> SuiteResult:
    grid = Grid.from_omega_max(n, config.grid.omega_max)
    table = collision.build_kernel_table(grid, config.model)
    rng = np.random.default_rng(config.seed)
    phi_vals, org_vals = [], []
    L = grid.omega_max / 4.0
    for _ in range(count):
        s = lower_half_spectrum(grid, rng)
        phi_vals.append(collision.weak_rhs(s, table, lambda w: np.log1p(w)))
        org_vals.append(collision.weak_rhs(s, table, lambda w: np.maximum(L - w, 0.0)))
    phi_vals, org_vals = np.array(phi_vals), np.array(org_vals)
    passed = bool(np.all(phi_vals <= tol) and np.all(org_vals >= -tol))
    return SuiteResult("lyapunov", passed, {
        "spectra": count, "n": n, "support": "[0, omega_max/2)", "tol": tol,
        "max_weak_rhs_log": float(phi_vals.max()), "min_weak_rhs_origin": float(org_vals.min()),
    })


def suite_equilibria(config: SimulationConfig, sizes=(8, 32, 64), tol: float = 1e-12) -> SuiteResult:
    rows, passed = [], True
    for n in sizes:
        grid = Grid.from_omega_max(n, config.grid.omega_max)
        table = collision.build_kernel_table(grid, config.model)
        for label, F in (("f=c", table.weight * 1.0), ("f=c/omega", table.weight / grid.centers)):
            r = np.max(np.abs(collision.rhs_array(F, table)))
            scale = float(np.max(collision.rhs_magnitude(F, table)))
            ok = bool(r <= tol * scale)
            passed &= ok
            rows.append({"n": n, "state": label, "max_abs_rhs": float(r), "scale": scale, "passed": ok})
    return SuiteResult("equilibria", passed, {"tol": tol, "rows": rows})


def suite_oracle(config: SimulationConfig, count: int = 50, n: int = 8, tol: float = 1e-12) -> SuiteResult:
    grid = Grid.from_omega_max(n, config.grid.omega_max)
    table = collision.build_kernel_table(grid, config.model)
    rng = np.random.default_rng(config.seed)
    worst = 0.0
    for _ in range(count):
        s = Spectrum(grid, rng.random(n))
        fast = collision.collision_rhs(s, table)
        slow = collision.brute_force_rhs(s, config.model)
        worst = max(worst, float(np.max(np.abs(fast - slow)) / np.max(np.abs(slow))))
    return SuiteResult("oracle", worst <= tol, {"spectra": count, "n": n, "max_rel_error": worst, "tol": tol})


def suite_min_kernel(config: SimulationConfig) -> SuiteResult:
    kc = config.kernel_check
    rng = np.random.default_rng(config.seed)
    rows, passed = [], True
    for r in collision.random_admissible_quadruples(rng, kc.count, kc.lo, kc.hi):
        res = collision.min_kernel_oracle(*r, tol=kc.tol)
        ok = bool(res.rel_error <= kc.tol and res.converged)
        passed &= ok
        rows.append({"r": list(res.r), "quadrature": res.value, "closed_form": res.closed_form,
                     "rel_error": res.rel_error, "converged": res.converged, "passed": ok})
    return SuiteResult("min_kernel", passed, {"tol": kc.tol, "range": [kc.lo, kc.hi], "rows": rows})


def suite_inclusion(config: SimulationConfig, max_N: int = 32, samples: int = 10_000) -> SuiteResult:
    index_rows, passed = [], True
    for N in range(3, max_N + 1):
        ok, detail = index_level_check(DecompositionSpec(float(N), 1.0))
        passed &= ok
        if not ok:
            index_rows.append({"N": N, "detail": detail})
    rep = inclusion_check(DecompositionSpec(1.0, 0.1), sample_count=samples, seed=config.seed)
    passed &= rep.passed
    return SuiteResult("inclusion", bool(passed), {
        "index_level_N_range": [3, max_N], "index_level_failures": index_rows,
        "sampled": rep.as_dict(),
    })


def suite_supersolution(config: SimulationConfig) -> SuiteResult:
    from .analysis import supersolution_section, supersolution_segment

    traj, info = supersolution_segment(config)
    if traj is None:
        return SuiteResult("supersolution", True, info, skipped=info.get("skipped", ""))
    tp = theory_params(config, traj.records[0]["mass"])
    sec = supersolution_section(traj, tp, config.model, info["n"])
    sec["segment"] = info
    return SuiteResult("supersolution", bool(sec.get("passed", False)), sec)


_RUNNERS = {
    "conservation": suite_conservation,
    "lyapunov": suite_lyapunov,
    "equilibria": suite_equilibria,
    "oracle": suite_oracle,
    "min_kernel": suite_min_kernel,
    "inclusion": suite_inclusion,
    "supersolution": suite_supersolution,
}


def run_suites(config: SimulationConfig, names=SUITES) -> list[SuiteResult]:
    out = []
    for name in names:
        out.append(_timed(name, lambda name=name: _RUNNERS[name](config)))
    return out


def report(results: list[SuiteResult]) -> dict:
    return {
        "passed": all(r.passed for r in results),
        "suites": [r.as_dict() for r in results],
    }


def jsonable(obj):
    """Recursively convert numpy scalars and arrays for JSON output."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj
