"""SSP-RK3 time stepping with positivity retries, trajectory recording and
condensation-onset detection."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from . import collision, spectrum as sp
from .collision import KernelTable
from .errors import ConfigError, StateError
from .spectrum import Grid, Spectrum

if TYPE_CHECKING:
    from .config import SimulationConfig

logger = logging.getLogger(__name__)

HORIZON = "horizon"
CONDENSATION = "condensation-detected"
DT_UNDERFLOW = "dt-underflow"


class DtUnderflow(StateError):
    """Positivity could not be restored above the minimum time step."""


@dataclass(frozen=True)
class StepControl:
    """Time-step policy.

    ``record_dt``, when set, samples the trajectory on the uniform time grid
    ``0, record_dt, 2 record_dt, ...`` (steps are shortened to land on it);
    otherwise every ``record_every``-th accepted step is recorded.  After an
    accepted step ``dt`` recovers by ``growth`` up to ``dt_max``.
    """

    dt_init: float = 1e-3
    dt_min: float = 1e-14
    safety: float = 0.5
    t_end: float = 1.0
    record_every: int = 1
    record_dt: float | None = None
    cons_tol: float = 1e-10
    growth: float = 1.1
    dt_max: float | None = None
    max_steps: int = 10_000_000

    def violations(self) -> list[str]:
        out = []
        if not (self.dt_init > 0):
            out.append("step dt_init must be > 0")
        if not (0 < self.dt_min < self.dt_init):
            out.append("step control needs 0 < dt_min < dt_init")
        if not (0 < self.safety < 1):
            out.append("step safety factor must lie in (0, 1)")
        if self.t_end < 0:
            out.append("step t_end must be >= 0")
        if self.record_every < 1:
            out.append("step record_every must be >= 1")
        if self.record_dt is not None and not (self.record_dt > 0):
            out.append("step record_dt must be > 0")
        if self.growth < 1:
            out.append("step growth must be >= 1")
        if self.cons_tol <= 0:
            out.append("step cons_tol must be > 0")
        return out

    @property
    def dt_cap(self) -> float:
        return self.dt_init if self.dt_max is None else self.dt_max


@dataclass
class StepResult:
    spectrum: Spectrum
    dt: float
    retries: int


def _ssprk3(F: np.ndarray, table: KernelTable, dt: float) -> np.ndarray | None:
    """One Shu-Osher SSP-RK3 step; None if any stage goes negative."""
    u1 = F + dt * collision.rhs_array(F, table)
    if np.any(u1 < 0):
        return None
    u2 = 0.75 * F + 0.25 * (u1 + dt * collision.rhs_array(u1, table))
    if np.any(u2 < 0):
        return None
    out = F / 3.0 + (2.0 / 3.0) * (u2 + dt * collision.rhs_array(u2, table))
    if np.any(out < 0):
        return None
    if not np.all(np.isfinite(out)):
        raise StateError("non-finite value produced by time step")
    return out


def step(spectrum: Spectrum, table: KernelTable, dt: float, dt_min: float = 1e-14,
         safety: float = 0.5) -> StepResult:
    """Advance by one SSP-RK3 step, retrying with ``dt * safety`` on negativity.

    Negative cells are never clipped; below ``dt_min`` DtUnderflow is raised.
    """
    if not (dt > 0):
        raise ConfigError("dt must be > 0")
    retries = 0
    while True:
        out = _ssprk3(spectrum.F, table, dt)
        if out is not None:
            return StepResult(spectrum.with_values(out, t=spectrum.t + dt), dt, retries)
        dt *= safety
        retries += 1
        if dt < dt_min:
            raise DtUnderflow(f"positivity lost at t={spectrum.t} with dt below {dt_min}")


def suggest_dt(spectrum: Spectrum, table: KernelTable, cfl: float = 0.2) -> float:
    """``cfl`` over the largest relative loss rate ``-R_i / F_i``; gain never limits positivity."""
    R = collision.rhs_array(spectrum.F, table)
    F = spectrum.F
    mask = (F > 0) & (R < 0)
    if not np.any(mask):
        return math.inf
    return cfl / float(np.max(-R[mask] / F[mask]))


# -- trajectories -----------------------------------------------------------


def dyadic_levels(grid: Grid) -> list[int]:
    """Exponents n with h_grid <= 2**-n <= omega_max (windows of at least one cell)."""
    lo = math.ceil(-math.log2(grid.omega_max) - 1e-12)
    hi = math.floor(-math.log2(grid.h_grid) + 1e-12)
    return list(range(lo, hi + 1))


def default_n_range(grid: Grid) -> tuple[int, int]:
    lo = math.ceil(-math.log2(grid.omega_max) - 1e-12) + 2
    hi = math.floor(-math.log2(8 * grid.h_grid) + 1e-12)
    return lo, max(lo, hi)


@dataclass
class Trajectory:
    snapshots: list[Spectrum] = field(default_factory=list)
    records: list[dict] = field(default_factory=list)
    termination: str = HORIZON
    record_dt: float | None = None
    dyadic_n: list[int] = field(default_factory=list)
    origin_L: float | None = None
    condensation_time: float | None = None

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    @property
    def grid(self) -> Grid:
        return self.snapshots[0].grid

    def column(self, key: str) -> np.ndarray:
        return np.array([r[key] for r in self.records])

    def dyadic_mass(self, n: int) -> np.ndarray:
        return self.column(f"dyadic_mass_n{n}")

    def diagnostics_header(self) -> list[str]:
        return list(self.records[0].keys()) if self.records else []

    def write(self, spectra_path, diagnostics_path) -> None:
        sp.write_spectra_csv(spectra_path, self.snapshots)
        write_diagnostics_csv(diagnostics_path, self.records)


def write_diagnostics_csv(path, records: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if not records:
            return
        keys = list(records[0].keys())
        w.writerow(keys)
        for r in records:
            w.writerow([repr(float(r[k])) for k in keys])


def read_diagnostics_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        try:
            return [{k: float(v) for k, v in row.items()} for row in reader]
        except (TypeError, ValueError) as exc:
            raise StateError(f"{path}: malformed diagnostics row ({exc})") from exc


def diagnostics_record(s: Spectrum, table: KernelTable, dyadic_n: list[int], origin_L: float,
                       with_dissipation: bool = True) -> dict:
    rec = {
        "t": s.t,
        "mass": sp.mass(s),
        "energy": sp.energy(s),
        "phi": sp.lyapunov_phi(s),
        "D": collision.dissipation_D(s, table) if with_dissipation else float("nan"),
    }
    for n in dyadic_n:
        rec[f"dyadic_mass_n{n}"] = sp.interval_mass(s, 0.0, 2.0**-n)
    rec["condensate"] = s.condensate
    rec["origin_functional"] = sp.test_functional(s, lambda w: np.maximum(origin_L - w, 0.0))
    return rec


@dataclass(frozen=True)
class Detector:
    """Dyadic origin-concentration test: mass in [0, 2**-n) >= C_F 2**(-n varsigma)
    for every n in ``n_range`` (inclusive)."""

    C_F: float
    varsigma: float
    n_range: tuple[int, int]

    def fires(self, dyadic: dict[int, float]) -> bool:
        lo, hi = self.n_range
        return all(dyadic[n] >= self.C_F * 2.0 ** (-n * self.varsigma) for n in range(lo, hi + 1))


def integrate(initial: Spectrum, table: KernelTable, control: StepControl,
              detector: Detector | None = None, origin_L: float | None = None,
              with_dissipation: bool = True) -> Trajectory:
    """Integrate from ``initial`` to ``control.t_end`` or an earlier termination."""
    bad = control.violations()
    if bad:
        raise ConfigError(bad)
    grid = initial.grid
    levels = dyadic_levels(grid)
    if detector is not None:
        lo, hi = detector.n_range
        if lo > hi or lo < levels[0] or hi > levels[-1]:
            raise ConfigError(f"detector n_range {detector.n_range} outside resolvable "
                              f"dyadic levels [{levels[0]}, {levels[-1]}]")
    L = grid.omega_max / 4.0 if origin_L is None else origin_L
    traj = Trajectory(record_dt=control.record_dt, dyadic_n=levels, origin_L=L)

    def record(s: Spectrum) -> bool:
        rec = diagnostics_record(s, table, levels, L, with_dissipation)
        traj.snapshots.append(s)
        traj.records.append(rec)
        if detector is not None and detector.fires({n: rec[f"dyadic_mass_n{n}"] for n in levels}):
            traj.termination = CONDENSATION
            traj.condensation_time = s.t
            return True
        return False

    s = initial
    if record(s) or control.t_end == 0:
        return traj
    m0, e0 = sp.mass(s), sp.energy(s)
    dt = control.dt_init
    n_steps = 0
    k_record = 1

    def sample_time(k: int) -> float | None:
        if control.record_dt is None:
            return None
        tk = k * control.record_dt
        # a sample within round-off of the horizon is the horizon
        return control.t_end if tk >= control.t_end - 1e-9 * control.record_dt else tk

    next_record = sample_time(k_record)
    while s.t < control.t_end and n_steps < control.max_steps:
        target = control.t_end if next_record is None else min(next_record, control.t_end)
        remaining = target - s.t
        # absorb slivers so round-off never leaves a near-zero step before a sample
        landing = dt >= remaining * (1.0 - 1e-9)
        dt_try = remaining if landing else dt
        try:
            res = step(s, table, dt_try, control.dt_min, control.safety)
        except DtUnderflow as exc:
            logger.warning("%s", exc)
            traj.termination = DT_UNDERFLOW
            return traj
        landed = landing and res.retries == 0
        s = res.spectrum
        if landed:
            # snap to the sample time exactly so cadences stay uniform
            s = s.with_values(s.F, t=target)
        n_steps += 1
        m1, e1 = sp.mass(s), sp.energy(s)
        if abs(m1 - m0) > control.cons_tol * abs(m0) or abs(e1 - e0) > control.cons_tol * abs(e0):
            logger.warning("conservation drift above %.1e at t=%.6g (mass %.3e, energy %.3e)",
                           control.cons_tol, s.t, (m1 - m0) / m0 if m0 else 0.0, (e1 - e0) / e0 if e0 else 0.0)
        if res.retries:
            dt = res.dt
        elif not landing:
            dt = min(dt * control.growth, control.dt_cap)
        if next_record is not None:
            if landed and target == next_record:
                k_record += 1
                next_record = sample_time(k_record)
                if record(s):
                    return traj
            elif landed and target == control.t_end:
                if record(s):
                    return traj
        elif n_steps % control.record_every == 0 or s.t >= control.t_end:
            if record(s):
                return traj
    if traj.snapshots[-1].t != s.t:
        record(s)
    return traj


def detect_condensation(trajectory: Trajectory, C_F: float, varsigma: float,
                        n_range: tuple[int, int]) -> float | None:
    """First recorded time at which the dyadic origin test holds at every scale, or None."""
    if not trajectory.records:
        raise ConfigError("trajectory has no records")
    lo, hi = n_range
    levels = trajectory.dyadic_n
    if lo > hi or lo < levels[0] or hi > levels[-1]:
        raise ConfigError(f"n_range {n_range} finer or coarser than the recorded dyadic "
                          f"levels [{levels[0]}, {levels[-1]}]")
    det = Detector(C_F, varsigma, (lo, hi))
    for rec in trajectory.records:
        if det.fires({n: rec[f"dyadic_mass_n{n}"] for n in range(lo, hi + 1)}):
            return rec["t"]
    return None


def run(config: "SimulationConfig") -> Trajectory:
    """Build model, grid, profile and kernel from a validated config and integrate."""
    from .config import build_problem

    problem = build_problem(config)
    return integrate(problem.initial, problem.table, problem.control, problem.detector,
                     with_dissipation=config.diagnostics.record_dissipation)
