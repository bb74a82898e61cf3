"""The transport kernel mu built from a trajectory, the barrier rho_super and its checks.

``mu(t, z)`` is the autocorrelation of ``G = F chi_{Xi_i(t)} chi_V(t)`` times
a constant prefactor.  Since ``F`` is piecewise constant on grid cells and the
windows are cell-aligned, ``mu(t, .)`` is exactly piecewise linear in ``z``
with knots at multiples of ``h_grid``.  Between recorded times ``mu`` is
interpolated linearly in ``t``, which makes ``A_mu`` and ``B_mu`` exact
piecewise-quadratic integrals.

Convention: ``i(t)`` is the index ``i >= 2**(M0 - 1) - 1`` maximizing the
mass in ``Xi_i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from .growth import GrowthParams, growth_set_memberships, level_resolvable

INDEX_RULE = "argmax-xi-mass"


def upsilon(z, L: float):
    """exp[(1/L)(L/10 - z)_+] - 1."""
    z = np.asarray(z, dtype=float)
    return np.expm1(np.maximum(L / 10.0 - z, 0.0) / L)


def upsilon_dd(z, L: float):
    """Second derivative of upsilon away from the kink at L/10."""
    z = np.asarray(z, dtype=float)
    return np.where(z < L / 10.0, np.exp((L / 10.0 - z) / L) / L**2, 0.0)


def autocorrelation(g: np.ndarray, h: float) -> np.ndarray:
    """Knot values c_m = int G(w) G(w + m h) dw for piecewise-constant G on cells of width h."""
    g = np.asarray(g, dtype=float)
    K = g.size
    full = np.correlate(g, g, mode="full")[K - 1:]
    return np.concatenate([full * h, [0.0]])


def _moment(c: np.ndarray, z: np.ndarray, p: int) -> np.ndarray:
    """Exact int c(z) z**p dz for c linear between knots, p in {0, 1, 2}; c may be 2-D."""
    a, b = z[:-1], z[1:]
    ca, cb = c[..., :-1], c[..., 1:]
    d = b - a
    if p == 0:
        return np.sum(d * (ca + cb) / 2.0, axis=-1)
    if p == 1:
        return np.sum(d / 6.0 * (ca * (2 * a + b) + cb * (a + 2 * b)), axis=-1)
    if p == 2:
        return np.sum(d / 12.0 * (ca * (3 * a * a + 2 * a * b + b * b) + cb * (a * a + 2 * a * b + 3 * b * b)), axis=-1)
    raise ValueError(p)


@dataclass
class MuSamples:
    n: int
    L: float
    hbar: float
    times: np.ndarray
    z: np.ndarray
    values: np.ndarray
    index: np.ndarray
    in_V: np.ndarray
    G_mass: np.ndarray
    prefactor: float
    T1: float
    T1_target: float
    T1_solved: bool
    index_rule: str = INDEX_RULE

    @property
    def z_max(self) -> float:
        return float(self.z[-1])

    def moments(self, p: int) -> np.ndarray:
        return _moment(self.values, self.z, p)

    def _time_weights(self, t: float) -> tuple[int, float]:
        ts = self.times
        if t <= ts[0]:
            return 0, 0.0
        if t >= ts[-1]:
            return len(ts) - 2, 1.0
        m = int(np.searchsorted(ts, t, side="right") - 1)
        return m, (t - ts[m]) / (ts[m + 1] - ts[m])

    def knots_at(self, t: float) -> np.ndarray:
        """mu(t, z_k) at the knots, linear in t between samples."""
        if len(self.times) == 1:
            return self.values[0]
        m, w = self._time_weights(t)
        return (1.0 - w) * self.values[m] + w * self.values[m + 1]

    def at(self, t: float, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return np.interp(z, self.z, self.knots_at(t), left=0.0, right=0.0)


def solve_T1(times: np.ndarray, G_mass: np.ndarray, target: float) -> tuple[float, bool]:
    """Time at which the running trapezoid of (int G)^2 reaches ``target``."""
    q = G_mass**2
    cum = np.concatenate([[0.0], np.cumsum(np.diff(times) * (q[1:] + q[:-1]) / 2.0)])
    hit = np.nonzero(cum >= target)[0]
    if hit.size == 0 or target <= 0:
        return float(times[-1]), False
    k = int(hit[0])
    if k == 0:
        return float(times[0]), True
    frac = (target - cum[k - 1]) / (cum[k] - cum[k - 1])
    return float(times[k - 1] + frac * (times[k] - times[k - 1])), True


def T1_target(params: GrowthParams, n: int, model, C1: float = 1.0) -> float:
    """Right side of the T1 equation: int_0^T1 (int G)^2 dt equals this value."""
    L = params.L(n)
    return L ** (params.epsilon - params.beta) / (C1 * model.C_omega ** (2.0 / params.alpha)
                                                  * 4000.0 * float(model.mho(L / 2.0)))


def estimate_T1(spectrum, params: GrowthParams, n: int, model, C1: float = 1.0) -> float | None:
    """T1 if int G stayed at its initial value; None when t = 0 is outside V_n."""
    _, _, _, V, _, xi_mass = growth_set_memberships([spectrum], params, n)
    if not V[0]:
        return None
    k0 = params.v_threshold(n)
    G0 = float(np.max(xi_mass[0, k0:]))
    return T1_target(params, n, model, C1) / G0**2


def build_mu(trajectory, params: GrowthParams, n: int, model, T1: float | None = None,
             index_rule: str = INDEX_RULE, C1: float = 1.0) -> MuSamples:
    """Sample mu(t, z) at every recorded time up to T1 (solved from its defining equation if None)."""
    if index_rule != INDEX_RULE:
        raise ConfigError(f"unsupported index rule {index_rule!r}; only {INDEX_RULE!r}")
    snaps = trajectory.snapshots
    grid = snaps[0].grid
    ok, why = level_resolvable(params, n, grid.h_grid, grid.omega_max)
    if not ok:
        raise ConfigError(f"growth level n={n} not resolvable: {why}")
    h = grid.h_grid
    L, hb = params.L(n), params.hbar(n)
    ratio = hb / h
    if abs(ratio - round(ratio)) > 1e-9 * ratio:
        raise ConfigError(f"hbar_{n}={hb} must be a whole number of grid cells ({h})")
    spec = params.decomposition(n)
    lo, hi = spec.xi_bounds()
    k0 = params.v_threshold(n)
    _, _, _, V, _, xi_mass = growth_set_memberships(snaps, params, n)

    K = int(round(3 * ratio))
    z = np.arange(K + 1) * h
    C_omega = model.C_omega
    pref = float(model.mho(L / 2.0)) * C1 * C_omega ** (2.0 / params.alpha) / L ** (2.0 / params.alpha)
    times = np.array([s.t for s in snaps])
    values = np.zeros((len(snaps), K + 1))
    index = np.full(len(snaps), -1)
    G_mass = np.zeros(len(snaps))
    for m, s in enumerate(snaps):
        if not V[m]:
            continue
        i = k0 + int(np.argmax(xi_mass[m, k0:]))
        a, b = int(round(lo[i] / h)), int(round(hi[i] / h))
        g = s.F[a:b]
        c = autocorrelation(g, h)
        values[m, : c.size] = pref * c
        index[m] = i
        G_mass[m] = float(np.sum(g) * h)

    target = T1_target(params, n, model, C1)
    if T1 is None:
        T1_val, solved = solve_T1(times, G_mass, target)
    else:
        T1_val, solved = float(T1), False
        if not (times[0] <= T1_val <= times[-1]):
            raise ConfigError(f"T1={T1} outside the recorded times [{times[0]}, {times[-1]}]")
    return MuSamples(n, L, hb, times, z, values, index, V, G_mass, pref, T1_val, target, solved, index_rule)


@dataclass
class SupersolutionArtifacts:
    mu: MuSamples
    L: float
    T1: float
    C_upsilon: float
    _cum1: np.ndarray = field(repr=False)
    _cum2: np.ndarray = field(repr=False)
    _g1: np.ndarray = field(repr=False)
    _g2: np.ndarray = field(repr=False)

    def _running(self, cum, g, t: float) -> float:
        ts = self.mu.times
        if t <= ts[0]:
            return 0.0
        if t >= ts[-1]:
            return float(cum[-1])
        m = int(np.searchsorted(ts, t, side="right") - 1)
        d = ts[m + 1] - ts[m]
        s = t - ts[m]
        return float(cum[m] + s * g[m] + s * s / (2.0 * d) * (g[m + 1] - g[m]))

    def A(self, t: float) -> float:
        """int_t^T1 int mu z dz ds (zero past T1)."""
        if t >= self.T1:
            return 0.0
        return self._running(self._cum1, self._g1, self.T1) - self._running(self._cum1, self._g1, t)

    def B(self, t: float) -> float:
        if t >= self.T1:
            return 0.0
        return self.C_upsilon * (self._running(self._cum2, self._g2, self.T1)
                                 - self._running(self._cum2, self._g2, t))

    def rho(self, t: float, x) -> np.ndarray:
        return math.exp(self.B(t)) * upsilon(self.A(t) + np.asarray(x, dtype=float), self.L)

    def as_dict(self) -> dict:
        return {
            "n": self.mu.n, "L_n": self.L, "hbar_n": self.mu.hbar, "T1": self.T1,
            "T1_solved": self.mu.T1_solved, "T1_target": self.mu.T1_target,
            "C_upsilon": self.C_upsilon, "A_mu_0": self.A(self.mu.times[0]),
            "B_mu_0": self.B(self.mu.times[0]), "A_mu_bound": 27.0 * self.L / 4000.0,
            "index_rule": self.mu.index_rule,
            "samples_in_V": int(np.count_nonzero(self.mu.in_V)),
        }


def build_supersolution(mu: MuSamples, n: int | None = None, T1: float | None = None) -> SupersolutionArtifacts:
    """A_mu, B_mu and rho_super = exp(B_mu) upsilon(A_mu + x) for the sampled mu."""
    if n is not None and n != mu.n:
        raise ConfigError(f"mu was built for n={mu.n}, not {n}")
    T1 = mu.T1 if T1 is None else float(T1)
    if np.any(mu.values < 0):
        raise ConfigError("mu must be nonnegative")
    L = mu.L
    g1 = mu.moments(1)
    g2 = mu.moments(2) / 2.0
    ts = mu.times
    d = np.diff(ts)
    cum1 = np.concatenate([[0.0], np.cumsum(d * (g1[1:] + g1[:-1]) / 2.0)])
    cum2 = np.concatenate([[0.0], np.cumsum(d * (g2[1:] + g2[:-1]) / 2.0)])
    return SupersolutionArtifacts(mu, L, T1, L**-2 / 20.0, cum1, cum2, g1, g2)


@dataclass
class SupersolutionCheck:
    min_residual: float
    min_residual_support: float | None
    tol: float
    residual_ok: bool
    evaluated: int
    skipped_kink: int
    max_rho: float
    min_rho: float
    min_rho_near_origin: float
    support_ok: bool
    dx_ok: bool
    dxx_ok: bool
    A_nonincreasing: bool
    B_nonincreasing: bool
    upsilon_convexity_ok: bool
    A_max: float
    B_max: float

    @property
    def bounds_ok(self) -> bool:
        return self.min_rho >= 0.0 and self.max_rho <= 0.2 and self.min_rho_near_origin >= 0.05

    @property
    def passed(self) -> bool:
        return (self.residual_ok and self.bounds_ok and self.support_ok and self.dx_ok and self.dxx_ok
                and self.A_nonincreasing and self.B_nonincreasing and self.upsilon_convexity_ok)

    def as_dict(self) -> dict:
        out = dict(self.__dict__)
        out["bounds_ok"] = self.bounds_ok
        out["passed"] = self.passed
        return out


def verify_supersolution(art: SupersolutionArtifacts, mu: MuSamples | None = None, sample_points=None,
                         n_x: int = 161, z_refine: int = 8, fd_rel: float = 1e-3,
                         seed: int = 0) -> SupersolutionCheck:
    """Residual of d_t rho + int mu [rho(x + z) - rho(x)] dz >= 0 plus the barrier bounds.

    ``d_t`` is a centered difference with step ``fd_rel`` times the record
    spacing; the z-integral is the trapezoid rule on the mu knots refined
    ``z_refine`` times.  Samples whose x lies within two x-steps of the kink
    ``x + A_mu = L/10`` are skipped and counted.
    """
    mu = art.mu if mu is None else mu
    L = art.L
    ts = mu.times
    dt_rec = float(np.min(np.diff(ts))) if ts.size > 1 else 1.0
    delta = fd_rel * dt_rec
    if sample_points is None:
        mids = (ts[:-1] + ts[1:]) / 2.0
        t_pts = mids[mids + delta < art.T1] if ts.size > 1 else ts
        x_pts = np.linspace(0.0, 0.125 * L, n_x)
    else:
        t_pts, x_pts = (np.asarray(v, dtype=float) for v in sample_points)
    zf = np.linspace(0.0, mu.z_max, (mu.z.size - 1) * z_refine + 1)
    dz = zf[1] - zf[0]

    rho_max_all = 0.0
    worst = worst_support = math.inf
    evaluated = skipped = 0
    for t in t_pts:
        A = art.A(t)
        kink = L / 10.0 - A
        keep = np.abs(x_pts - kink) >= 2.0 * dz
        skipped += int(np.count_nonzero(~keep))
        xs = x_pts[keep]
        if xs.size == 0:
            continue
        d_t = (art.rho(t + delta, xs) - art.rho(t - delta, xs)) / (2.0 * delta)
        mz = mu.at(t, zf)
        diff = art.rho(t, xs[:, None] + zf[None, :]) - art.rho(t, xs)[:, None]
        integral = np.trapezoid(mz[None, :] * diff, zf, axis=1)
        res = d_t + integral
        evaluated += xs.size
        worst = min(worst, float(res.min()))
        inside = xs + A < L / 10.0
        if np.any(inside):
            worst_support = min(worst_support, float(res[inside].min()))
    # barrier bounds over all recorded times up to T1 and a fine x grid
    t_all = np.concatenate([ts[ts <= art.T1], [art.T1]])
    x_fine = np.linspace(0.0, 0.2 * L, 2001)
    rho_all = np.array([art.rho(t, x_fine) for t in t_all])
    rho_max_all = float(rho_all.max())
    near = x_fine <= L / 40.0
    min_near = float(rho_all[:, near].min())
    support_ok = bool(np.all(rho_all[:, x_fine > L / 10.0] == 0.0))
    tol = 1e-6 * rho_max_all
    # shape checks away from the kink
    dxk = dz
    dx_ok = dxx_ok = True
    for t in t_all:
        kink = L / 10.0 - art.A(t)
        xs = x_fine[(x_fine >= dxk) & (np.abs(x_fine - kink) >= 2 * dxk)]
        r0, rp, rm = art.rho(t, xs), art.rho(t, xs + dxk), art.rho(t, xs - dxk)
        dx_ok &= bool(np.all((rp - rm) / (2 * dxk) <= tol / dxk))
        dxx_ok &= bool(np.all((rp - 2 * r0 + rm) / dxk**2 >= -tol / dxk**2))
    A_vals = np.array([art.A(t) for t in t_all])
    B_vals = np.array([art.B(t) for t in t_all])
    rng = np.random.default_rng(seed)
    z1 = rng.uniform(0.0, L / 10.0, 1000)
    z2 = rng.uniform(0.0, L / 10.0, 1000)
    conv_ok = bool(np.all(upsilon_dd(z1, L) >= art.C_upsilon * upsilon(z2, L)))
    if worst is math.inf:
        worst = 0.0
    return SupersolutionCheck(
        min_residual=worst, min_residual_support=None if worst_support is math.inf else worst_support, tol=tol, residual_ok=worst >= -tol, evaluated=evaluated,
        skipped_kink=skipped, max_rho=rho_max_all, min_rho=float(rho_all.min()),
        min_rho_near_origin=min_near, support_ok=support_ok, dx_ok=dx_ok, dxx_ok=dxx_ok,
        A_nonincreasing=bool(np.all(np.diff(A_vals) <= 1e-15 * max(A_vals.max(), 1e-300))),
        B_nonincreasing=bool(np.all(np.diff(B_vals) <= 1e-15 * max(B_vals.max(), 1e-300))),
        upsilon_convexity_ok=conv_ok, A_max=float(A_vals.max()), B_max=float(B_vals.max()))
