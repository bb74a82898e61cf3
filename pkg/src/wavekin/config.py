"""Run configuration: one JSON document, validated in full at parse time."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

from . import collision, integrator as it
from .dispersion import DispersionModel, validate_assumptions
from .errors import ConfigError, DomainError
from .integrator import Detector, StepControl
from .spectrum import Grid, ProfileSpec, Spectrum, init_from_profile, mass
from .theory.decomposition import DecompositionSpec
from .theory.growth import GrowthParams, level_resolvable
from .theory.timesets import digamma_star_violations

SHIPPED_CONFIGS = ("positive_control", "bump_control", "spread", "minimal")

# detector threshold when C_F is unset, as a fraction of the initial mass; a flat
# profile holds at most a quarter of its mass on the default levels, so never fires
DETECTOR_MASS_FRACTION = 0.5

_DISPERSION_KEYS = {"form": "power-law", "alpha": 2.0, "C": 1.0, "r": None, "omega": None,
                    "C_omega": None, "alpha_prime": None, "C_omega_prime": None, "beta": None,
                    "C_mho_check": None, "C_mho_1": None, "iota": None}
_GRID_KEYS = {"n_cells": None, "omega_max": None}
_PROFILE_KEYS = {f.name: f.default for f in fields(ProfileSpec)}
_KERNEL_KEYS = {"scale": 1.0, "mode": "auto", "max_table_mib": 256.0}
_STEP_KEYS = {"dt_init": "auto", "dt_min": 1e-14, "safety": 0.5, "t_end": 1.0, "record_every": 1,
              "record_dt": None, "cons_tol": 1e-10, "growth": 1.1, "dt_max": None,
              "max_steps": 10_000_000, "cfl": 0.2}
_DETECTOR_KEYS = {"enabled": True, "C_F": None, "varsigma": 0.01, "n_range": None}
_DIAG_KEYS = {"nu": 0.05, "R": None, "h_sub": None, "N": 1000, "theta": 0.005, "m": 4, "Re": None,
              "epsilon": None, "varsigma": 0.01, "C_F": None, "N0": [6, 8], "growth_levels": None,
              "supersolution_level": None, "record_dissipation": True}
_KCHECK_KEYS = {"count": 20, "lo": 0.1, "hi": 10.0, "tol": 0.01}
_TOP_KEYS = ("dispersion", "grid", "profile", "kernel", "step", "detector", "diagnostics",
             "kernel_check", "seed", "output_dir")


@dataclass(frozen=True)
class KernelOptions:
    scale: float = 1.0
    mode: str = "auto"
    max_table_mib: float = 256.0


@dataclass(frozen=True)
class DetectorOptions:
    enabled: bool = True
    C_F: float | None = None
    varsigma: float = 0.01
    n_range: tuple[int, int] | None = None


@dataclass(frozen=True)
class DiagnosticsOptions:
    """Theory-diagnostic parameters; ``None`` fields take grid-relative defaults."""

    nu: float = 0.05
    R: float | None = None
    h_sub: float | None = None
    N: int = 1000
    theta: float = 0.005
    m: int = 4
    Re: float | None = None
    epsilon: float | None = None
    varsigma: float = 0.01
    C_F: float | None = None
    N0: tuple[int, ...] = (6, 8)
    growth_levels: tuple[int, ...] | None = None
    supersolution_level: int | None = None
    record_dissipation: bool = True


@dataclass(frozen=True)
class KernelCheckOptions:
    count: int = 20
    lo: float = 0.1
    hi: float = 10.0
    tol: float = 0.01


@dataclass(frozen=True)
class SimulationConfig:
    model: DispersionModel
    grid: Grid
    profile: ProfileSpec
    step: StepControl
    dt_auto: bool = True
    cfl: float = 0.2
    kernel: KernelOptions = field(default_factory=KernelOptions)
    detector: DetectorOptions = field(default_factory=DetectorOptions)
    diagnostics: DiagnosticsOptions = field(default_factory=DiagnosticsOptions)
    kernel_check: KernelCheckOptions = field(default_factory=KernelCheckOptions)
    seed: int = 0
    output_dir: str = "out"
    source: str | None = None
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    def with_step(self, **changes) -> "SimulationConfig":
        return replace(self, step=replace(self.step, **changes))


# -- parsing ----------------------------------------------------------------


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _block(raw: dict, name: str, defaults: dict, bad: list[str], required: tuple = ()) -> dict:
    block = raw.get(name, {})
    if block is None:
        block = {}
    if not isinstance(block, dict):
        bad.append(f"{name}: expected an object")
        return dict(defaults)
    for key in block:
        if key not in defaults:
            bad.append(f"{name}: unknown key {key!r}")
    for key in required:
        if block.get(key) is None:
            bad.append(f"{name}: missing required key {key!r}")
    out = dict(defaults)
    out.update({k: v for k, v in block.items() if k in defaults})
    return out


def _numbers(block: dict, name: str, keys, bad: list[str]) -> None:
    for k in keys:
        v = block.get(k)
        if v is not None and not _is_number(v):
            bad.append(f"{name}.{k} must be a finite number, got {v!r}")
            block[k] = None


def _integer(block: dict, name: str, key: str, bad: list[str]) -> None:
    v = block.get(key)
    if v is None:
        return
    if not _is_number(v) or int(v) != v:
        bad.append(f"{name}.{key} must be an integer, got {v!r}")
        block[key] = None
    else:
        block[key] = int(v)


def load_json(path) -> dict:
    """Read a JSON document; syntax errors become ConfigError with line and column."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{p}: top level must be an object")
    return data


def parse_config(path) -> SimulationConfig:
    """Parse and validate a config file, reporting every violation at once."""
    cfg = config_from_dict(load_json(path))
    return replace(cfg, source=str(path))


def config_from_dict(raw: dict) -> SimulationConfig:
    bad: list[str] = []
    for key in raw:
        if key not in _TOP_KEYS:
            bad.append(f"unknown top-level key {key!r}")
    for key in ("dispersion", "grid", "profile"):
        if key not in raw:
            bad.append(f"missing required block {key!r}")

    d = _block(raw, "dispersion", _DISPERSION_KEYS, bad)
    _numbers(d, "dispersion", [k for k in _DISPERSION_KEYS if k not in ("form", "r", "omega")], bad)
    g = _block(raw, "grid", _GRID_KEYS, bad, required=("n_cells", "omega_max"))
    _integer(g, "grid", "n_cells", bad)
    _numbers(g, "grid", ["omega_max"], bad)
    p = _block(raw, "profile", _PROFILE_KEYS, bad, required=("kind",))
    _numbers(p, "profile", [k for k in _PROFILE_KEYS if k != "kind"], bad)
    k = _block(raw, "kernel", _KERNEL_KEYS, bad)
    _numbers(k, "kernel", ["scale", "max_table_mib"], bad)
    s = _block(raw, "step", _STEP_KEYS, bad)
    _numbers(s, "step", [x for x in _STEP_KEYS if x not in ("dt_init", "record_every", "max_steps")], bad)
    for key in ("record_every", "max_steps"):
        _integer(s, "step", key, bad)
    det = _block(raw, "detector", _DETECTOR_KEYS, bad)
    _numbers(det, "detector", ["C_F", "varsigma"], bad)
    dg = _block(raw, "diagnostics", _DIAG_KEYS, bad)
    _numbers(dg, "diagnostics", ["nu", "R", "h_sub", "theta", "Re", "epsilon", "varsigma", "C_F"], bad)
    for key in ("N", "m", "supersolution_level"):
        _integer(dg, "diagnostics", key, bad)
    kc = _block(raw, "kernel_check", _KCHECK_KEYS, bad)
    _numbers(kc, "kernel_check", ["lo", "hi", "tol"], bad)
    _integer(kc, "kernel_check", "count", bad)
    seed = raw.get("seed", 0)
    if not _is_number(seed) or int(seed) != seed or seed < 0:
        bad.append(f"seed must be a nonnegative integer, got {seed!r}")
        seed = 0
    out_dir = raw.get("output_dir", "out")
    if not isinstance(out_dir, str):
        bad.append("output_dir must be a string")
        out_dir = "out"

    # dispersion
    model = None
    bounds = {x: d[x] for x in ("C_omega", "alpha_prime", "C_omega_prime", "beta", "C_mho_check",
                                "C_mho_1", "iota") if d[x] is not None}
    if d["alpha"] is not None:
        try:
            if d["form"] == "table":
                model = DispersionModel.table(d["r"] or (), d["omega"] or (), d["alpha"], **bounds)
            elif d["form"] == "power-law":
                if d["r"] is not None or d["omega"] is not None:
                    bad.append("dispersion: 'r'/'omega' samples only apply to form 'table'")
                model = DispersionModel.power_law(d["alpha"], d["C"] if d["C"] is not None else 1.0, **bounds)
            else:
                bad.append(f"dispersion.form must be 'power-law' or 'table', got {d['form']!r}")
        except (ConfigError, DomainError, TypeError, ValueError) as exc:
            bad.extend(getattr(exc, "violations", [str(exc)]))
    if model is not None:
        rep = validate_assumptions(model)
        for c in rep.failures():
            bad.append(f"dispersion assumption violated: {c.name} (worst margin {c.worst_margin:.3g})")

    # grid
    grid = None
    if g["n_cells"] is not None and g["omega_max"] is not None:
        if g["omega_max"] <= 0:
            bad.append("grid.omega_max must be > 0")
        else:
            try:
                grid = Grid.from_omega_max(g["n_cells"], g["omega_max"])
            except ConfigError as exc:
                bad.extend(exc.violations)
        if grid is not None and model is not None and grid.omega_max > model.omega_range_max:
            bad.append(f"grid.omega_max={grid.omega_max} exceeds the tabulated dispersion range "
                       f"{model.omega_range_max}")

    # profile
    profile = None
    if p.get("kind") is not None:
        try:
            profile = ProfileSpec(**p)
            bad.extend(profile.violations(grid))
        except TypeError as exc:
            bad.append(f"profile: {exc}")

    # kernel
    if k["mode"] not in ("auto", "table", "on-the-fly"):
        bad.append(f"kernel.mode must be 'auto', 'table' or 'on-the-fly', got {k['mode']!r}")
    if k["scale"] is not None and k["scale"] <= 0:
        bad.append("kernel.scale must be > 0")
    kernel = KernelOptions(k["scale"] or 1.0, k["mode"], k["max_table_mib"] or 256.0)

    # step control
    dt_auto = s["dt_init"] == "auto"
    if not dt_auto and not _is_number(s["dt_init"]):
        bad.append(f"step.dt_init must be a number or 'auto', got {s['dt_init']!r}")
        dt_auto = True
    if s["cfl"] is not None and not (0 < s["cfl"] <= 1):
        bad.append("step.cfl must lie in (0, 1]")
    control = StepControl(
        dt_init=1.0 if dt_auto else float(s["dt_init"]),
        dt_min=s["dt_min"] if s["dt_min"] is not None else 1e-14,
        safety=s["safety"] if s["safety"] is not None else 0.5,
        t_end=s["t_end"] if s["t_end"] is not None else 1.0,
        record_every=s["record_every"] or 1,
        record_dt=s["record_dt"],
        cons_tol=s["cons_tol"] if s["cons_tol"] is not None else 1e-10,
        growth=s["growth"] if s["growth"] is not None else 1.1,
        dt_max=s["dt_max"],
        max_steps=s["max_steps"] or 10_000_000,
    )
    step_bad = control.violations()
    if dt_auto:
        # dt_init is computed at build time; only dt_min positivity is checkable here
        step_bad = [v for v in step_bad if "dt_min < dt_init" not in v]
        if not control.dt_min > 0:
            step_bad.append("step control needs dt_min > 0")
    bad.extend(step_bad)
    if control.dt_max is not None and control.dt_max <= 0:
        bad.append("step.dt_max must be > 0")

    # detector
    levels = it.dyadic_levels(grid) if grid is not None else []
    n_range = det["n_range"]
    if n_range is not None:
        if (not isinstance(n_range, (list, tuple)) or len(n_range) != 2
                or not all(_is_number(x) and int(x) == x for x in n_range)):
            bad.append(f"detector.n_range must be two integers, got {n_range!r}")
            n_range = None
        else:
            n_range = (int(n_range[0]), int(n_range[1]))
            if levels and (n_range[0] > n_range[1] or n_range[0] < levels[0] or n_range[1] > levels[-1]):
                bad.append(f"detector.n_range {list(n_range)} outside the grid's resolvable dyadic "
                           f"levels [{levels[0]}, {levels[-1]}] (2**-n between h_grid and omega_max)")
    if det["C_F"] is not None and det["C_F"] <= 0:
        bad.append("detector.C_F must be > 0")
    if det["varsigma"] is not None and det["varsigma"] < 0:
        bad.append("detector.varsigma must be >= 0")
    if not isinstance(det["enabled"], bool):
        bad.append("detector.enabled must be true or false")
    detector = DetectorOptions(bool(det["enabled"]), det["C_F"],
                               det["varsigma"] if det["varsigma"] is not None else 0.01, n_range)

    # diagnostics
    diag = _parse_diagnostics(dg, model, grid, levels, bad)

    # kernel check
    if kc["count"] is not None and kc["count"] < 1:
        bad.append("kernel_check.count must be >= 1")
    if kc["lo"] is not None and kc["hi"] is not None and not (0 < kc["lo"] < kc["hi"]):
        bad.append("kernel_check needs 0 < lo < hi")
    if kc["tol"] is not None and not kc["tol"] > 0:
        bad.append("kernel_check.tol must be > 0")
    kcheck = KernelCheckOptions(kc["count"] or 20, kc["lo"] or 0.1, kc["hi"] or 10.0, kc["tol"] or 0.01)

    if bad:
        raise ConfigError(bad)
    return SimulationConfig(model, grid, profile, control, dt_auto, s["cfl"] or 0.2, kernel, detector,
                            diag, kcheck, int(seed), out_dir, None, raw)


def _parse_diagnostics(dg: dict, model, grid, levels, bad: list[str]) -> DiagnosticsOptions:
    nu, theta, N, m = dg["nu"], dg["theta"], dg["N"], dg["m"]
    if nu is not None and not (0 < nu < 0.1):
        bad.append(f"diagnostics.nu={nu} must satisfy 0 < nu < 1/10 (spread-set definition)")
    if N is not None and theta is not None:
        bad.extend(f"diagnostics.{v}" for v in digamma_star_violations(N, theta))
    if m is not None and m < 2:
        bad.append(f"diagnostics.m={m} must be an integer >= 2")
    for key in ("R", "h_sub", "Re", "C_F"):
        if dg[key] is not None and dg[key] <= 0:
            bad.append(f"diagnostics.{key} must be > 0")
    if grid is not None:
        R = dg["R"] if dg["R"] is not None else grid.omega_max / 2
        h_sub = dg["h_sub"] if dg["h_sub"] is not None else R / 10
        if R > grid.omega_max * (1 + 1e-12):
            bad.append(f"diagnostics.R={R} exceeds omega_max={grid.omega_max}")
        elif 0 < h_sub:
            try:
                DecompositionSpec(R, h_sub)
            except DomainError as exc:
                bad.append(f"diagnostics R/h_sub: {exc}")
        Re = dg["Re"] if dg["Re"] is not None else grid.omega_max / 8
        if m is not None and Re > 0 and m * Re > grid.omega_max * (1 + 1e-12):
            bad.append(f"diagnostics: m*Re={m * Re} exceeds omega_max={grid.omega_max}")
    for key in ("N0", "growth_levels"):
        v = dg[key]
        if v is not None and (not isinstance(v, (list, tuple))
                              or not all(_is_number(x) and int(x) == x for x in v)):
            bad.append(f"diagnostics.{key} must be a list of integers")
            dg[key] = None
    if not isinstance(dg["record_dissipation"], bool):
        bad.append("diagnostics.record_dissipation must be true or false")
    eps = dg["epsilon"]
    if model is not None:
        probe = GrowthParams(model.alpha, model.beta, 0.0)
        lo, hi = probe.epsilon_window()
        if eps is None:
            eps = 0.5 * (lo + hi)
        params = GrowthParams(model.alpha, model.beta, eps, dg["varsigma"] if dg["varsigma"] is not None else 0.0,
                              dg["C_F"] or 1.0)
        bad.extend(f"diagnostics: {v}" for v in params.violations()
                   if not v.startswith(("alpha", "beta")))
        for n in dg["growth_levels"] or ():
            if levels and not (levels[0] <= n <= levels[-1]):
                bad.append(f"diagnostics.growth_levels: n={n} outside resolvable levels "
                           f"[{levels[0]}, {levels[-1]}]")
        n_sup = dg["supersolution_level"]
        if n_sup is not None and grid is not None:
            ok, why = level_resolvable(params, n_sup, grid.h_grid, grid.omega_max, min_cells=4)
            if not ok:
                bad.append(f"diagnostics.supersolution_level: {why}")
    return DiagnosticsOptions(
        nu=nu if nu is not None else 0.05, R=dg["R"], h_sub=dg["h_sub"], N=N or 1000,
        theta=theta if theta is not None else 0.005, m=m or 4, Re=dg["Re"], epsilon=eps,
        varsigma=dg["varsigma"] if dg["varsigma"] is not None else 0.01, C_F=dg["C_F"],
        N0=tuple(int(x) for x in (dg["N0"] or ())),
        growth_levels=None if dg["growth_levels"] is None else tuple(int(x) for x in dg["growth_levels"]),
        supersolution_level=dg["supersolution_level"], record_dissipation=bool(dg["record_dissipation"]))


def shipped_config_path(name: str = "positive_control") -> Path:
    """Path of a config bundled with the package."""
    if name not in SHIPPED_CONFIGS:
        raise ConfigError(f"unknown shipped config {name!r}; choose from {SHIPPED_CONFIGS}")
    return Path(str(resources.files("wavekin") / "configs" / f"{name}.json"))


# -- problem assembly -------------------------------------------------------


@dataclass
class Problem:
    config: SimulationConfig
    initial: Spectrum
    table: collision.KernelTable
    detector: Detector | None
    control: StepControl


def build_problem(config: SimulationConfig) -> Problem:
    """Initial spectrum, kernel table, detector and resolved step control."""
    grid, model = config.grid, config.model
    initial = init_from_profile(grid, config.profile)
    table = collision.build_kernel_table(grid, model, config.kernel.scale, config.kernel.mode,
                                         int(config.kernel.max_table_mib * 2**20))
    control = config.step
    if config.dt_auto:
        dt = it.suggest_dt(initial, table, config.cfl)
        caps = [x for x in (control.dt_max, control.record_dt, control.t_end) if x is not None and x > 0]
        dt = min([dt] + caps) if caps else dt
        if not math.isfinite(dt):
            dt = 1.0
        control = replace(control, dt_init=dt, dt_min=min(control.dt_min, dt * 1e-3))
    det = None
    if config.detector.enabled:
        m0 = mass(initial)
        C_F = config.detector.C_F if config.detector.C_F is not None else DETECTOR_MASS_FRACTION * m0
        n_range = config.detector.n_range or it.default_n_range(grid)
        det = Detector(C_F, config.detector.varsigma, n_range)
    return Problem(config, initial, table, det, control)


@dataclass(frozen=True)
class TheoryParams:
    """Grid-resolved theory-diagnostic parameters."""

    spec: DecompositionSpec
    nu: float
    N: int
    theta: float
    m: int
    Re: float
    growth: GrowthParams
    N0: tuple[int, ...]
    growth_levels: tuple[int, ...]
    supersolution_level: int | None


def theory_params(config: SimulationConfig, initial_mass: float) -> TheoryParams:
    grid, dg = config.grid, config.diagnostics
    R = dg.R if dg.R is not None else grid.omega_max / 2
    h_sub = dg.h_sub if dg.h_sub is not None else R / 10
    Re = dg.Re if dg.Re is not None else grid.omega_max / 8
    C_F = dg.C_F if dg.C_F is not None else 0.1 * initial_mass
    gp = GrowthParams(config.model.alpha, config.model.beta, dg.epsilon, dg.varsigma, C_F)
    levels = dg.growth_levels
    if levels is None:
        levels = tuple(n for n in it.dyadic_levels(grid)
                       if level_resolvable(gp, n, grid.h_grid, grid.omega_max)[0])
    n_sup = dg.supersolution_level
    if n_sup is None:
        ok = [n for n in it.dyadic_levels(grid)
              if level_resolvable(gp, n, grid.h_grid, grid.omega_max, min_cells=4)[0]]
        n_sup = ok[0] if ok else None
    return TheoryParams(DecompositionSpec(R, h_sub), dg.nu, dg.N, dg.theta, dg.m, Re, gp,
                        dg.N0, tuple(levels), n_sup)
