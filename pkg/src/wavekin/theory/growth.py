"""Growth-lemma parameters, dyadic growth sets and the onset-time bound."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, StateError
from ..spectrum import interval_masses
from .decomposition import DecompositionSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GrowthParams:
    """Exponents of the growth lemmas; ``C_F`` is the threshold constant.

    Derived per dyadic level ``n``: ``L_n = 2**-n``,
    ``M0(n) = floor(n (2/alpha + beta - epsilon))`` and ``hbar_n = L_n / 2**M0(n)``.
    """

    alpha: float
    beta: float
    epsilon: float
    varsigma: float = 0.0
    C_F: float = 0.1

    # -- windows ------------------------------------------------------------

    @property
    def _shift(self) -> float:
        a, b = self.alpha, self.beta
        return (2.0 / a) * (b + 1.0) / (b + 2.0) + b * (b + 3.0) / (b + 2.0)

    def epsilon_window(self) -> tuple[float, float]:
        """Open interval admissible for epsilon."""
        return self._shift, 2.0 / self.alpha + self.beta

    def varsigma_max(self) -> float:
        b, e = self.beta, self.epsilon
        return 0.5 * min((b + 2.0) / 3.0 * (e - self._shift), (e - 2.0 * b) / 3.0)

    def gamma(self, varsigma: float | None = None) -> float:
        s = self.varsigma if varsigma is None else varsigma
        b, e = self.beta, self.epsilon
        return min(e - 2.0 * b - 2.0 * s, (b + 2.0) * (e - self._shift - 3.0 * s / (b + 2.0)))

    def violations(self) -> list[str]:
        out = []
        if not (1.0 < self.alpha <= 2.0):
            out.append(f"alpha={self.alpha} must lie in (1, 2]")
        if not (0.0 <= self.beta <= (2.0 - self.alpha) / self.alpha + 1e-15):
            out.append(f"beta={self.beta} must lie in [0, (2-alpha)/alpha]")
        lo, hi = self.epsilon_window()
        if not (lo < self.epsilon < hi):
            out.append(f"epsilon={self.epsilon} must lie in the open window ({lo!r}, {hi!r})")
        smax = self.varsigma_max()
        if not (0.0 <= self.varsigma <= smax):
            out.append(f"varsigma={self.varsigma} must lie in [0, {smax!r}]")
        if self.C_F <= 0:
            out.append("C_F must be > 0")
        return out

    def validate(self) -> "GrowthParams":
        bad = self.violations()
        if bad:
            raise ConfigError(bad)
        return self

    # -- per-level quantities -----------------------------------------------

    def L(self, n: int) -> float:
        return 2.0 ** (-n)

    def M0(self, n: int) -> int:
        return int(math.floor(n * (2.0 / self.alpha + self.beta - self.epsilon) + 1e-12))

    def hbar(self, n: int) -> float:
        return 2.0 ** (-n - self.M0(n))

    def decomposition(self, n: int) -> DecompositionSpec:
        return DecompositionSpec(self.L(n), self.hbar(n))

    def v_threshold(self, n: int) -> int:
        """First Xi index of the upper group: 2**(M0 - 1) - 1."""
        return 2 ** (self.M0(n) - 1) - 1


def level_resolvable(params: GrowthParams, n: int, h_grid: float, omega_max: float,
                     min_cells: float = 1.0) -> tuple[bool, str]:
    if params.M0(n) < 2:
        return False, f"M0({n})={params.M0(n)} gives fewer than 4 subdomains"
    if params.hbar(n) < min_cells * h_grid * (1 - 1e-12):
        return False, f"hbar_{n}={params.hbar(n)} below {min_cells} grid cell(s) of {h_grid}"
    if params.L(n) > omega_max * (1 + 1e-12):
        return False, f"L_{n}={params.L(n)} exceeds omega_max={omega_max}"
    return True, ""


def uniform_cadence(times: np.ndarray, rtol: float = 1e-9) -> float:
    """Common spacing of ``times``; StateError if the spacing is not uniform."""
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        raise StateError("need at least two samples for a time-set measure")
    dt = np.diff(times)
    step = float(dt[0])
    if step <= 0 or np.any(np.abs(dt - step) > rtol * max(step, abs(times[-1]))):
        raise StateError("trajectory cadence is not uniform; time-set measures are undefined")
    return step


def measure(member: np.ndarray, dt: float) -> float:
    """Left-rectangle measure: each sample but the last stands for [t_m, t_m + dt)."""
    member = np.asarray(member, dtype=bool)
    return float(np.count_nonzero(member[:-1]) * dt)


@dataclass
class GrowthSetReport:
    n: int
    L: float
    hbar: float
    M0: int
    cadence: float
    horizon: float
    times: np.ndarray
    S_n: np.ndarray
    S_ni: np.ndarray
    U: np.ndarray
    V: np.ndarray
    W: np.ndarray
    xi_mass: np.ndarray
    gamma: float
    skipped: str = ""

    @property
    def measures(self) -> dict:
        dt = self.cadence
        return {
            "S_n": measure(self.S_n, dt),
            "S_ni": [measure(col, dt) for col in self.S_ni.T],
            "U_n": measure(self.U, dt),
            "V_n": measure(self.V, dt),
            "W_n": measure(self.W, dt),
        }

    def as_dict(self) -> dict:
        return {
            "n": self.n, "L_n": self.L, "hbar_n": self.hbar, "M0": self.M0,
            "cadence": self.cadence, "horizon": self.horizon,
            "measures": self.measures,
            "gamma": self.gamma, "L_n_pow_gamma": self.L ** self.gamma,
        }


def growth_set_memberships(snapshots, params: GrowthParams, n: int):
    """Per-sample masses and memberships of S_n, S_{n,i}, U_n, V_n, W_n."""
    spec = params.decomposition(n)
    L = params.L(n)
    lo, hi = spec.xi_bounds()
    S_n, S_ni, xi_mass = [], [], []
    for s in snapshots:
        m_xi = interval_masses(s.F, s.grid, lo, hi)
        # Xi windows starting at 0 include the condensate atom
        m_xi = m_xi + np.where(lo == 0.0, s.condensate, 0.0)
        m_L = float(interval_masses(s.F, s.grid, [0.0], [L])[0] + s.condensate)
        S_n.append(m_L >= params.C_F * L ** params.varsigma)
        S_ni.append(m_xi >= params.C_F * params.L(n + 1) ** params.varsigma)
        xi_mass.append(m_xi)
    S_n = np.array(S_n, dtype=bool)
    S_ni = np.array(S_ni, dtype=bool).reshape(len(snapshots), spec.N)
    k = params.v_threshold(n)
    any_i = S_ni.any(axis=1)
    U = S_n & ~any_i
    V = S_ni[:, k:].any(axis=1)
    W = S_ni[:, : max(k, 0)].any(axis=1)
    return S_n, S_ni, U, V, W, np.array(xi_mass).reshape(len(snapshots), spec.N)


def growth_set_measures(trajectory, params: GrowthParams, n: int) -> GrowthSetReport | None:
    """Sample-count measures of the growth sets at level ``n``; None if unresolvable."""
    snaps = trajectory.snapshots
    grid = snaps[0].grid
    ok, why = level_resolvable(params, n, grid.h_grid, grid.omega_max)
    if not ok:
        logger.warning("skipping growth level n=%d: %s", n, why)
        return None
    times = np.array([s.t for s in snaps])
    dt = uniform_cadence(times)
    S_n, S_ni, U, V, W, xi_mass = growth_set_memberships(snaps, params, n)
    return GrowthSetReport(n, params.L(n), params.hbar(n), params.M0(n), dt, float(times[-1]),
                           times, S_n, S_ni, U, V, W, xi_mass, params.gamma())


def condensation_bound_report(params: GrowthParams, N0_list, T0_estimates,
                              varsigma: float | None = None) -> dict:
    """Rows (N0, 2**(-N0 gamma), T0_hat, T0_hat / bound) plus the trend comparison.

    The bound carries an unknown constant, so only the trend is judged:
    between consecutive N0 the observed ratio T0_hat' / T0_hat should not
    exceed the bound ratio 2**(-dN0 gamma).
    """
    g = params.gamma(varsigma)
    if not g > 0:
        s = params.varsigma if varsigma is None else varsigma
        raise ConfigError(f"gamma(varsigma={s})={g!r} <= 0: need varsigma < (epsilon - 2 beta)/2 "
                          f"and epsilon > {params._shift!r} + 3 varsigma/(beta + 2)")
    rows = []
    for N0, T0 in zip(N0_list, T0_estimates):
        bound = 2.0 ** (-N0 * g)
        rows.append({
            "N0": int(N0),
            "bound": bound,
            "T0_hat": None if T0 is None else float(T0),
            "ratio": None if T0 is None else float(T0) / bound,
        })
    trend = []
    for a, b in zip(rows, rows[1:]):
        if a["T0_hat"] is None or b["T0_hat"] is None:
            trend.append({"from": a["N0"], "to": b["N0"], "consistent": None})
            continue
        observed = b["T0_hat"] / a["T0_hat"]
        allowed = b["bound"] / a["bound"]
        trend.append({"from": a["N0"], "to": b["N0"], "observed_ratio": observed,
                      "bound_ratio": allowed,
                      "consistent": bool(b["N0"] <= a["N0"] or observed <= allowed)})
    return {"gamma": g, "rows": rows, "trend": trend}
