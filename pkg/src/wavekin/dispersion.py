"""Radial dispersion relations omega(|k|) and the Jacobian weight mho = |k| / omega'(|k|).

Two forms are supported: an analytic power law ``omega = C r**alpha`` and a
tabulated monotone convex relation interpolated with a shape-preserving cubic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ConfigError, DomainError, RangeError

_REL_TOL = 1e-12


@dataclass(frozen=True)
class DispersionModel:
    """Dispersion relation with the exponents and constants of its structural bounds.

    ``C_omega``, ``alpha_prime``, ``C_omega_prime``, ``beta``, ``C_mho_check``,
    ``C_mho_1`` and ``iota`` default to the sharp values of the power law
    ``C r**alpha``.
    """

    alpha: float = 2.0
    C: float = 1.0
    form: str = "power-law"
    r_table: tuple[float, ...] | None = None
    omega_table: tuple[float, ...] | None = None
    C_omega: float | None = None
    alpha_prime: float | None = None
    C_omega_prime: float | None = None
    beta: float | None = None
    C_mho_check: float | None = None
    C_mho_1: float | None = None
    iota: float | None = None
    _interp: PchipInterpolator | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        a, C = float(self.alpha), float(self.C)
        if self.form not in ("power-law", "table"):
            raise ConfigError(f"unknown dispersion form {self.form!r}")
        if not (C > 0):
            raise ConfigError("dispersion coefficient C must be positive")
        defaults = {
            "C_omega": C,
            "alpha_prime": a,
            "C_omega_prime": C,
            "beta": (2.0 - a) / a,
            "C_mho_check": C ** (-2.0 / a) / a,
            "C_mho_1": 1.0 / (C * a),
            "iota": 2.0 - a,
        }
        for name, value in defaults.items():
            if getattr(self, name) is None:
                object.__setattr__(self, name, value)
        if self.form == "table":
            if self.r_table is None or self.omega_table is None:
                raise ConfigError("tabulated dispersion needs both 'r' and 'omega' samples")
            r = np.asarray(self.r_table, dtype=float)
            w = np.asarray(self.omega_table, dtype=float)
            if r.shape != w.shape or r.size < 4:
                raise ConfigError("dispersion table needs at least 4 matching (r, omega) samples")
            if r[0] != 0.0 or w[0] != 0.0:
                raise ConfigError("dispersion table must start at (r, omega) = (0, 0)")
            if np.any(np.diff(r) <= 0):
                raise ConfigError("dispersion table r samples must be strictly increasing")
            object.__setattr__(self, "r_table", tuple(r))
            object.__setattr__(self, "omega_table", tuple(w))
            # Non-monotone omega samples are reported by validate_assumptions, not here.
            object.__setattr__(self, "_interp", PchipInterpolator(r, w, extrapolate=False))

    @classmethod
    def power_law(cls, alpha: float, C: float = 1.0, **bounds) -> "DispersionModel":
        return cls(alpha=alpha, C=C, form="power-law", **bounds)

    @classmethod
    def table(cls, r, omega, alpha: float, **bounds) -> "DispersionModel":
        return cls(alpha=alpha, form="table", r_table=tuple(r), omega_table=tuple(omega), **bounds)

    @property
    def r_max(self) -> float:
        return np.inf if self.form == "power-law" else self.r_table[-1]

    @property
    def omega_range_max(self) -> float:
        return np.inf if self.form == "power-law" else self.omega_table[-1]

    # -- evaluation -------------------------------------------------------

    def omega_of_k(self, r):
        """Frequency at wavenumber magnitude ``r``."""
        r_arr = np.asarray(r, dtype=float)
        if np.any(r_arr < 0) or np.any(np.isnan(r_arr)):
            raise DomainError("wavenumber magnitude must be >= 0")
        if self.form == "power-law":
            out = self.C * r_arr**self.alpha
        else:
            if np.any(r_arr > self.r_max):
                raise RangeError(f"r outside tabulated range [0, {self.r_max}]")
            out = self._interp(r_arr)
        return out if np.ndim(r) else float(out)

    def k_of_omega(self, omega):
        """Inverse of :meth:`omega_of_k`; analytic for power laws, bisection for tables."""
        w = np.asarray(omega, dtype=float)
        if np.any(w < 0) or np.any(np.isnan(w)):
            raise DomainError("frequency must be >= 0")
        if self.form == "power-law":
            out = (w / self.C) ** (1.0 / self.alpha)
        else:
            if np.any(w > self.omega_range_max):
                raise RangeError(f"omega outside tabulated range [0, {self.omega_range_max}]")
            out = self._bisect(np.atleast_1d(w)).reshape(w.shape)
        return out if np.ndim(omega) else float(out)

    def _bisect(self, w: np.ndarray) -> np.ndarray:
        lo = np.zeros_like(w)
        hi = np.full_like(w, self.r_max)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            below = self._interp(mid) < w
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.all(hi - lo <= 4 * np.finfo(float).eps * np.maximum(hi, 1e-300)):
                break
        return 0.5 * (lo + hi)

    def _domega_dr(self, r: np.ndarray) -> np.ndarray:
        step = 1e-6 * np.maximum(r, 1.0)
        lo = np.clip(r - step, 0.0, self.r_max)
        hi = np.clip(r + step, 0.0, self.r_max)
        return (self._interp(hi) - self._interp(lo)) / (hi - lo)

    def mho(self, omega):
        """Weight |k| / omega'(|k|) expressed as a function of omega."""
        w = np.asarray(omega, dtype=float)
        if np.any(w < 0) or np.any(np.isnan(w)):
            raise DomainError("frequency must be >= 0")
        if self.form == "power-law":
            a = self.alpha
            out = (w / self.C) ** ((2.0 - a) / a) / (self.C * a)
        else:
            r = np.atleast_1d(self.k_of_omega(w))
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.where(r > 0, r / self._domega_dr(r), 0.0).reshape(w.shape)
        return out if np.ndim(omega) else float(out)

    def f_F_weight(self, omega):
        """w(omega) = |k| mho, so that F = f w."""
        out = np.asarray(self.k_of_omega(omega)) * np.asarray(self.mho(omega))
        return out if np.ndim(omega) else float(out)


# -- assumption checks ----------------------------------------------------


@dataclass
class Check:
    name: str
    passed: bool
    worst_margin: float
    first_violation: float | None = None
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [c.__dict__ for c in self.checks],
        }


def _range_check(name, value, lo, hi, lo_open=False, hi_open=False) -> Check:
    low_ok = value > lo if lo_open else value >= lo
    high_ok = value < hi if hi_open else value <= hi
    margin = min(value - lo, hi - value)
    return Check(name, bool(low_ok and high_ok), float(margin),
                 None if low_ok and high_ok else float(value),
                 f"{lo}{'<' if lo_open else '<='}{name}{'<' if hi_open else '<='}{hi}")


def _ineq_check(name, lhs, rhs, xs) -> Check:
    """Pass iff lhs <= rhs sample-wise, up to a relative tolerance."""
    scale = np.maximum(np.abs(lhs), np.abs(rhs))
    slack = rhs - lhs + _REL_TOL * scale
    if slack.size == 0:
        return Check(name, True, np.inf, detail="no samples in range")
    bad = np.nonzero(slack < 0)[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(scale > 0, (rhs - lhs) / scale, 0.0)
    return Check(name, bad.size == 0, float(rel.min()),
                 None if bad.size == 0 else float(xs[bad[0]]))


def validate_assumptions(model: DispersionModel, sample_count: int = 256) -> ValidationReport:
    """Evaluate every structural assumption on a log-spaced sample of wavenumbers.

    Violations are reported, never raised.
    """
    if sample_count < 2:
        raise DomainError("sample_count must be >= 2")
    a = model.alpha
    checks = [
        _range_check("alpha", a, 1.0, 2.0, lo_open=True),
        _range_check("alpha_prime", model.alpha_prime, 1.0, a),
        _range_check("beta", model.beta, 0.0, (2.0 - a) / a),
        _range_check("iota", model.iota, 0.0, 1.0),
        _range_check("C_omega", model.C_omega, 0.0, np.inf, lo_open=True),
        _range_check("C_omega_prime", model.C_omega_prime, 0.0, np.inf, lo_open=True),
        _range_check("C_mho_check", model.C_mho_check, 0.0, np.inf),
        _range_check("C_mho_1", model.C_mho_1, 0.0, np.inf),
    ]

    r_hi = min(1e4, model.r_max)
    r = np.logspace(-8, np.log10(r_hi), sample_count)
    if model.form == "table":
        # the knots themselves are samples, so a dip between log-spaced points is not missed
        knots = np.asarray(model.r_table)
        r = np.unique(np.concatenate([r, knots[(knots > 0) & (knots <= r_hi)]]))
        tw = np.diff(np.asarray(model.omega_table))
        checks.append(Check("table omega samples strictly increasing", bool(np.all(tw > 0)), float(tw.min()),
                            None if np.all(tw > 0) else float(model.r_table[1 + int(np.argmax(tw <= 0))])))
    w = np.asarray(model.omega_of_k(r))
    mho = np.asarray(model.mho(w)) if np.all(np.diff(w) > 0) else None

    inc = np.diff(w)
    checks.append(Check("omega strictly increasing", bool(np.all(inc > 0)), float(inc.min()),
                        None if np.all(inc > 0) else float(r[1:][inc <= 0][0])))
    slopes = inc / np.diff(r)
    dslope = np.diff(slopes) + _REL_TOL * np.abs(slopes[1:])
    checks.append(Check("omega convex in |k|", bool(np.all(dslope >= 0)), float(dslope.min()),
                        None if np.all(dslope >= 0) else float(r[2:][dslope < 0][0])))

    if mho is None:
        checks.append(Check("mho nondecreasing", False, -np.inf, None, "omega not monotone"))
        return ValidationReport(checks)

    dm = np.diff(mho) + 1e-14
    checks.append(Check("mho nondecreasing", bool(np.all(dm >= 0)), float(dm.min()),
                        None if np.all(dm >= 0) else float(w[1:][dm < 0][0])))
    checks.append(_ineq_check("omega >= C_omega r^alpha", model.C_omega * r**a, w, r))
    small_r = r < 1
    checks.append(_ineq_check("omega <= C_omega' r^alpha' (r<1)", w[small_r],
                              model.C_omega_prime * r[small_r] ** model.alpha_prime, r[small_r]))
    small_w = w < 1
    checks.append(_ineq_check("C_mho_check omega^beta <= mho (omega<1)",
                              model.C_mho_check * w[small_w] ** model.beta, mho[small_w], w[small_w]))
    checks.append(_ineq_check("mho <= C_mho_1 r^iota", mho, model.C_mho_1 * r**model.iota, r))
    return ValidationReport(checks)
