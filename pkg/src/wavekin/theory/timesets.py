"""Non-condensation time sets and their sampled Lebesgue measures."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from ..spectrum import Spectrum, interval_mass, interval_masses, mass, energy
from .decomposition import DecompositionSpec
from .growth import uniform_cadence


def _spread_test(F_window: np.ndarray, total: float, frac: float) -> bool:
    # an empty [0, R) never counts as spread: 0 < 0 is false
    return bool(np.all(F_window < (1.0 - frac) * total))


def digamma2_member(spectrum: Spectrum, spec: DecompositionSpec, nu: float) -> bool:
    """Every Xi_i holds less than (1 - nu) of the mass in [0, R); False if a condensate exists."""
    if not (0.0 < nu < 0.1):
        raise ConfigError(f"nu={nu} must lie in (0, 1/10)")
    if spectrum.condensate > 0:
        return False
    lo, hi = spec.xi_bounds()
    win = interval_masses(spectrum.F, spectrum.grid, lo, hi)
    total = interval_mass(spectrum, 0.0, spec.R)
    return _spread_test(win, total, nu)


def digamma_star_violations(N: int, theta: float) -> list[str]:
    out = []
    if int(N) != N or N < 1000:
        out.append(f"N={N} must be an integer >= 1000 (spread-set definition)")
    if not (0.0 < theta < 0.01):
        out.append(f"theta={theta} must satisfy 0 < theta < 1/100 (spread-set definition)")
    return out


def digamma_star_member(spectrum: Spectrum, N: int, theta: float, R: float) -> bool:
    """Every window [iR/N, (i+3)R/N), i < N - 2, holds less than (1 - theta) of the mass in [0, R)."""
    bad = digamma_star_violations(N, theta)
    if bad:
        raise ConfigError(bad)
    if spectrum.condensate > 0:
        return False
    i = np.arange(N - 2)
    win = interval_masses(spectrum.F, spectrum.grid, i * R / N, (i + 3) * R / N)
    total = interval_mass(spectrum, 0.0, R)
    return _spread_test(win, total, theta)


@dataclass
class TimeMeasureReport:
    cadence: float
    horizon: float
    times: np.ndarray
    member_digamma2: np.ndarray
    member_star: np.ndarray
    mass_window: np.ndarray
    mass_star_window: np.ndarray
    params: dict
    structural_factor: float
    star_structural_factor: float
    mass_factor: float
    mass_lower_bound: float
    mass_lower_slack: np.ndarray
    notes: list = field(default_factory=list)

    def _cumulative(self, member, window) -> np.ndarray:
        # left-rectangle rule: the sample at t_m stands for [t_m, t_m + dt)
        contrib = np.where(member, window**3, 0.0)[:-1] * self.cadence
        return np.concatenate([[0.0], np.cumsum(contrib)])

    @property
    def pumped_digamma2(self) -> np.ndarray:
        """Cumulative int_{digamma^2 ∩ [0, T]} (int_[0,R) F)^3 dt at each sample T."""
        return self._cumulative(self.member_digamma2, self.mass_window)

    @property
    def pumped_star(self) -> np.ndarray:
        return self._cumulative(self.member_star, self.mass_star_window)

    @property
    def measure_digamma2(self) -> float:
        return float(np.count_nonzero(self.member_digamma2[:-1]) * self.cadence)

    @property
    def measure_star(self) -> float:
        return float(np.count_nonzero(self.member_star[:-1]) * self.cadence)

    @property
    def ratio_series(self) -> np.ndarray:
        """Pumped integral over the structural factor, as a function of T."""
        return self.pumped_digamma2 / self.structural_factor

    @property
    def star_ratio_series(self) -> np.ndarray:
        return self.pumped_star / self.star_structural_factor

    def as_dict(self) -> dict:
        return {
            "cadence": self.cadence,
            "horizon": self.horizon,
            "params": self.params,
            "measure_digamma2": self.measure_digamma2,
            "measure_digamma_star": self.measure_star,
            "pumped_integral_digamma2": float(self.pumped_digamma2[-1]),
            "pumped_integral_digamma_star": float(self.pumped_star[-1]),
            "structural_factor_digamma2": self.structural_factor,
            "structural_factor_digamma_star": self.star_structural_factor,
            "ratio_digamma2": float(self.ratio_series[-1]),
            "ratio_digamma_star": float(self.star_ratio_series[-1]),
            "mass_factor_cubed": self.mass_factor,
            "measure_star_times_mass_factor_over_structural": self.measure_star * self.mass_factor / self.star_structural_factor,
            "mass_lower_bound": self.mass_lower_bound,
            "mass_lower_bound_min_slack": float(self.mass_lower_slack.min()),
            "mass_lower_bound_holds": bool(np.all(self.mass_lower_slack >= 0)),
            "notes": list(self.notes),
        }


def accumulate_time_measures(trajectory, spec: DecompositionSpec, nu: float, N: int, theta: float,
                             m: int, Re: float, model, condensation_time: float | None = None,
                             rtol_bound: float = 1e-12) -> TimeMeasureReport:
    """Sampled measures of the spread sets and the pumped integral with its structural factors.

    Samples at or after ``condensation_time`` (the detector's onset, when
    given) are outside the non-condensation set.
    """
    bad = digamma_star_violations(N, theta)
    if not (0.0 < nu < 0.1):
        bad.append(f"nu={nu} must lie in (0, 1/10)")
    if int(m) != m or m < 2:
        bad.append(f"m={m} must be an integer >= 2")
    if not Re > 0:
        bad.append("Re must be > 0")
    if bad:
        raise ConfigError(bad)
    snaps = trajectory.snapshots
    times = np.array([s.t for s in snaps])
    dt = uniform_cadence(times)
    R_star = m * Re
    s0 = snaps[0]
    M0_total = mass(s0)
    E0_total = energy(s0)
    Mo = interval_mass(s0, 0.0, Re)
    bound = (m - 1) * Mo / m

    in_f = np.array([s.condensate == 0 for s in snaps])
    notes = []
    if condensation_time is not None:
        in_f &= times < condensation_time
        notes.append(f"samples at t >= {condensation_time} treated as outside the non-condensation set")

    mem2, memstar, mwin, mstar, slack = [], [], [], [], []
    for s, ok in zip(snaps, in_f):
        mem2.append(ok and digamma2_member(s, spec, nu))
        memstar.append(ok and digamma_star_member(s, N, theta, R_star))
        mwin.append(interval_mass(s, 0.0, spec.R))
        w = interval_mass(s, 0.0, R_star)
        mstar.append(w)
        slack.append(w - bound + rtol_bound * M0_total)

    a = model.alpha
    h = spec.h
    sf = spec.R ** (2 + 2 / a) * (M0_total + E0_total) / (h**2 * float(model.mho(h)) * nu**4)
    hs = R_star / N
    sf_star = R_star ** (2 + 2 / a) * (M0_total + E0_total) / (hs**2 * float(model.mho(hs)) * theta**4)
    params = {"R": spec.R, "h": spec.h, "N_sub": spec.N, "nu": nu, "N": N, "theta": theta,
              "m": m, "Re": Re, "R_star": R_star, "Mo": Mo}
    return TimeMeasureReport(dt, float(times[-1]), times, np.array(mem2, bool), np.array(memstar, bool),
                             np.array(mwin), np.array(mstar), params, sf, sf_star, bound**3, bound,
                             np.array(slack), notes)
