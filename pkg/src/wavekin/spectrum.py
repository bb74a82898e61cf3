"""Frequency grid, spectrum state and integral functionals.

The state is the one-dimensional density ``F(omega) = f |k| mho`` on a uniform
grid of midpoint cells plus a separate mass atom (the condensate) at omega = 0.
All quantities are reduced by the 4*pi of the radial change of variables
``dk = 4 pi |k| mho domega``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

import numpy as np
from scipy import integrate
from scipy.special import erf

from .errors import ConfigError, DomainError, StateError

FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class Grid:
    """Uniform grid with centers ``(i + 1/2) h``.

    Centers are affine in the index with a common offset, so
    ``w_i + w_j == w_k + w_l`` exactly when ``i + j == k + l``.
    """

    n_cells: int
    h_grid: float

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 4:
            raise ConfigError("grid needs an integer n_cells >= 4")
        if not (self.h_grid > 0):
            raise ConfigError("grid spacing must be positive")

    @classmethod
    def from_omega_max(cls, n_cells: int, omega_max: float) -> "Grid":
        return cls(int(n_cells), omega_max / n_cells)

    @property
    def omega_max(self) -> float:
        return self.n_cells * self.h_grid

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.h_grid

    @property
    def edges(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) * self.h_grid


@dataclass(frozen=True)
class Spectrum:
    grid: Grid
    F: np.ndarray
    condensate: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        F = np.array(self.F, dtype=float)
        if F.shape != (self.grid.n_cells,):
            raise StateError(f"F has shape {F.shape}, grid has {self.grid.n_cells} cells")
        if not np.all(np.isfinite(F)) or not math.isfinite(self.condensate):
            raise StateError("spectrum contains non-finite values")
        if np.any(F < 0) or self.condensate < 0:
            raise StateError("spectrum values must be nonnegative")
        F.setflags(write=False)
        object.__setattr__(self, "F", F)

    def with_values(self, F, t=None, condensate=None) -> "Spectrum":
        return replace(self, F=F, t=self.t if t is None else t,
                       condensate=self.condensate if condensate is None else condensate)


# -- initial profiles -----------------------------------------------------

PROFILE_KINDS = ("power-concentrated", "gaussian-bump", "flat", "two-bump")


@dataclass(frozen=True)
class ProfileSpec:
    """Analytic initial profile for F(0, omega).

    ``power-concentrated`` is ``F = C_ini c_ini omega**(c_ini - 1)`` on
    ``(0, r0)``, so that the mass in ``[0, r)`` is exactly ``C_ini r**c_ini``;
    an optional exponential tail of amplitude ``tail_amplitude`` continues it
    past ``r0``.  ``mass``, when set, rescales the result to that reduced mass.
    """

    kind: str
    C_ini: float = 1.0
    c_ini: float = 1.5
    r0: float = 0.25
    tail_amplitude: float = 0.0
    tail_scale: float = 1.0
    center: float = 0.5
    width: float = 0.05
    amplitude: float = 1.0
    center2: float = 0.25
    width2: float = 0.05
    amplitude2: float = 1.0
    lo: float = 0.0
    hi: float | None = None
    mass: float | None = None

    def violations(self, grid: Grid | None = None) -> list[str]:
        out = []
        if self.kind not in PROFILE_KINDS:
            out.append(f"profile kind must be one of {PROFILE_KINDS}, got {self.kind!r}")
            return out
        if self.kind == "power-concentrated":
            if self.C_ini <= 0:
                out.append("profile C_ini must be > 0")
            if self.c_ini < 0:
                out.append("profile c_ini must be >= 0")
            if self.r0 <= 0:
                out.append("profile r0 must be > 0")
            if grid is not None and self.r0 >= grid.omega_max:
                out.append(f"profile r0={self.r0} must be < omega_max={grid.omega_max}")
            if self.tail_amplitude < 0 or self.tail_scale <= 0:
                out.append("profile tail needs tail_amplitude >= 0 and tail_scale > 0")
        else:
            amps = [self.amplitude] + ([self.amplitude2] if self.kind == "two-bump" else [])
            if any(a < 0 for a in amps):
                out.append("profile amplitude must be >= 0")
            if self.kind != "flat" and (self.width <= 0 or self.width2 <= 0):
                out.append("profile widths must be > 0")
        if self.mass is not None and self.mass < 0:
            out.append("profile mass must be >= 0")
        return out

    def cumulative(self, x: np.ndarray) -> np.ndarray:
        """Closed-form antiderivative ``int_0^x F(0, omega) domega``."""
        x = np.asarray(x, dtype=float)
        if self.kind == "power-concentrated":
            xc = np.minimum(x, self.r0)
            with np.errstate(divide="ignore"):
                core = self.C_ini * np.where(xc > 0, xc**self.c_ini, 0.0)
            over = np.maximum(x - self.r0, 0.0)
            tail = self.tail_amplitude * self.tail_scale * (-np.expm1(-over / self.tail_scale))
            return core + tail
        if self.kind == "flat":
            hi = np.inf if self.hi is None else self.hi
            return self.amplitude * np.clip(x - self.lo, 0.0, max(hi - self.lo, 0.0))
        out = _gauss_cdf(x, self.amplitude, self.center, self.width)
        if self.kind == "two-bump":
            out = out + _gauss_cdf(x, self.amplitude2, self.center2, self.width2)
        return out

    def density(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "power-concentrated":
            inside = (x > 0) & (x < self.r0)
            with np.errstate(divide="ignore", invalid="ignore"):
                core = np.where(inside, self.C_ini * self.c_ini * x ** (self.c_ini - 1.0), 0.0)
            tail = np.where(x >= self.r0, self.tail_amplitude * np.exp(-(x - self.r0) / self.tail_scale), 0.0)
            return core + tail
        if self.kind == "flat":
            hi = np.inf if self.hi is None else self.hi
            return np.where((x >= self.lo) & (x < hi), self.amplitude, 0.0)
        out = self.amplitude * np.exp(-0.5 * ((x - self.center) / self.width) ** 2)
        if self.kind == "two-bump":
            out = out + self.amplitude2 * np.exp(-0.5 * ((x - self.center2) / self.width2) ** 2)
        return out


def _gauss_cdf(x, amplitude, center, width):
    s = width * math.sqrt(2.0)
    return amplitude * width * math.sqrt(math.pi / 2.0) * (erf((x - center) / s) - erf(-center / s))


def init_from_profile(grid: Grid, spec: ProfileSpec) -> Spectrum:
    """Exact cell averages of the analytic profile; no condensate at t = 0."""
    bad = spec.violations(grid)
    if bad:
        raise ConfigError(bad)
    cum = spec.cumulative(grid.edges)
    F = np.maximum(np.diff(cum), 0.0) / grid.h_grid
    if spec.mass is not None:
        total = F.sum() * grid.h_grid
        if total > 0:
            F = F * (spec.mass / total)
    return Spectrum(grid, F, 0.0, 0.0)


def from_f(grid: Grid, f: np.ndarray, weight: np.ndarray, t: float = 0.0) -> Spectrum:
    """Spectrum whose distribution at the cell centers is ``f``; ``weight`` = |k| mho there."""
    return Spectrum(grid, np.asarray(f, dtype=float) * weight, 0.0, t)


# -- functionals ----------------------------------------------------------


def mass(s: Spectrum) -> float:
    """Reduced mass; the physical mass is 4 pi times this."""
    return float(math.fsum(s.F * s.grid.h_grid) + s.condensate)


def energy(s: Spectrum) -> float:
    """Reduced energy; the condensate sits at omega = 0 and carries none."""
    return float(math.fsum(s.F * s.grid.centers * s.grid.h_grid))


def interval_mass(s: Spectrum, a: float, b: float) -> float:
    """Mass in ``[a, b)`` under the piecewise-constant reconstruction.

    Cells straddling an endpoint contribute by overlap fraction; the
    condensate is included iff ``a == 0``.
    """
    if not (0 <= a < b):
        raise DomainError(f"need 0 <= a < b, got [{a}, {b})")
    return float(_overlap_sum(s.F, s.grid, a, b) + (s.condensate if a == 0 else 0.0))


def _overlap_sum(F: np.ndarray, grid: Grid, a: float, b: float) -> float:
    h = grid.h_grid
    lo = np.arange(grid.n_cells) * h
    overlap = np.clip(np.minimum(lo + h, b) - np.maximum(lo, a), 0.0, None)
    return math.fsum(F * overlap)


def interval_masses(F: np.ndarray, grid: Grid, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorized continuum mass over many ``[a_m, b_m)`` windows (no condensate)."""
    h = grid.h_grid
    lo = np.arange(grid.n_cells) * h
    a = np.asarray(a, dtype=float)[:, None]
    b = np.asarray(b, dtype=float)[:, None]
    overlap = np.clip(np.minimum(lo + h, b) - np.maximum(lo, a), 0.0, None)
    return overlap @ F


def lyapunov_phi(s: Spectrum) -> float:
    """Phi = int F ln(omega + 1) domega; the condensate contributes ln 1 = 0."""
    return float(math.fsum(s.F * np.log1p(s.grid.centers) * s.grid.h_grid))


def test_functional(s: Spectrum, phi: Callable[[np.ndarray], np.ndarray],
                    quadrature: str = "midpoint") -> float:
    """int F phi domega + condensate * phi(0).

    ``midpoint`` samples phi at cell centers, matching the discrete weak form.
    ``cell-exact`` integrates phi against the piecewise-constant F cell by
    cell with adaptive quadrature.
    """
    g = s.grid
    atom = s.condensate * float(phi(np.array(0.0))) if s.condensate else 0.0
    if quadrature == "midpoint":
        return float(math.fsum(s.F * np.asarray(phi(g.centers), dtype=float) * g.h_grid) + atom)
    if quadrature != "cell-exact":
        raise DomainError(f"unknown quadrature {quadrature!r}")
    total = []
    for i in np.nonzero(s.F)[0]:
        a, b = i * g.h_grid, (i + 1) * g.h_grid
        val, _ = integrate.quad(lambda x: float(phi(np.array(x))), a, b, epsabs=1e-15, epsrel=1e-12, limit=200)
        total.append(s.F[i] * val)
    return float(math.fsum(total) + atom)


# -- CSV serialization ----------------------------------------------------

SPECTRUM_HEADER = ("t", "cell_index", "omega_center", "F_value")


def spectrum_rows(s: Spectrum) -> Iterable[tuple]:
    for i, (w, v) in enumerate(zip(s.grid.centers, s.F)):
        yield (s.t, i, w, v)
    yield (s.t, -1, 0.0, s.condensate)


def _fmt(x) -> str:
    return str(x) if isinstance(x, (int, np.integer)) else repr(float(x))


def write_spectra_csv(path, spectra: Iterable[Spectrum]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SPECTRUM_HEADER)
        for s in spectra:
            for row in spectrum_rows(s):
                w.writerow([_fmt(v) for v in row])


def read_spectra_csv(path) -> list[Spectrum]:
    """Inverse of :func:`write_spectra_csv`; raises StateError on malformed files."""
    by_t: dict[float, dict] = {}
    order: list[float] = []
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(header) != SPECTRUM_HEADER:
                raise StateError(f"{path}: bad or missing header {header!r}")
            for lineno, row in enumerate(reader, start=2):
                if len(row) != 4:
                    raise StateError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
                t, idx, w, v = float(row[0]), int(row[1]), float(row[2]), float(row[3])
                if t not in by_t:
                    by_t[t] = {"cells": {}, "condensate": None}
                    order.append(t)
                if idx == -1:
                    by_t[t]["condensate"] = v
                else:
                    by_t[t]["cells"][idx] = (w, v)
    except ValueError as exc:
        raise StateError(f"{path}: unparseable value ({exc})") from exc
    out = []
    for t in order:
        rec = by_t[t]
        cells = rec["cells"]
        n = len(cells)
        if rec["condensate"] is None or n < 4 or sorted(cells) != list(range(n)):
            raise StateError(f"{path}: snapshot t={t} is truncated or incomplete")
        w0 = cells[0][0]
        grid = Grid(n, 2.0 * w0)
        F = np.array([cells[i][1] for i in range(n)])
        out.append(Spectrum(grid, F, rec["condensate"], t))
    if not out:
        raise StateError(f"{path}: no snapshots")
    return out


test_functional.__test__ = False  # keep pytest from collecting it
