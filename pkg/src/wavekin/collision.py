"""Reduced isotropic four-wave collision operator on a resonance-exact grid.

In F variables the operator reads

    dF/dt(w) = s * int dw1 dw2  Lam(w, w1, w2, w3) [f2 f3 (f1 + f) - f f1 (f2 + f3)],

with ``w3 = w + w1 - w2``, ``f = F / (|k| mho)`` and
``Lam = mho mho1 mho2 mho3 min(|k|, |k1|, |k2|, |k3|)``.  The run-scale
constant ``s`` absorbs the angular prefactor (8 pi^2) and fixes the time unit.

On the midpoint grid a quadruple is resonant iff ``i + j == k + l``.
Quadruples whose fourth index leaves ``[0, n)`` are dropped in both the gain
and the loss part, which keeps mass and energy conservation exact.
"""

from __future__ import annotations

import csv
import itertools
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .dispersion import DispersionModel
from .errors import DomainError, StateError
from .spectrum import Grid, Spectrum

logger = logging.getLogger(__name__)

DEFAULT_MAX_TABLE_BYTES = 256 * 2**20


@dataclass(frozen=True)
class KernelTable:
    """Precomputed resonance weights ``W[i, j, k] = Lam(w_i, w_j, w_k, w_{i+j-k})``.

    ``W`` is None in on-the-fly mode, where weights are recomputed from the
    per-cell ``mho`` and ``k`` vectors inside every sum.
    """

    grid: Grid
    model: DispersionModel
    mho: np.ndarray
    k: np.ndarray
    weight: np.ndarray
    W: np.ndarray | None = field(default=None, repr=False)
    scale: float = 1.0

    @property
    def divisor(self) -> np.ndarray:
        """1 / (|k| mho) at the cell centers, recovering f = F * divisor."""
        return 1.0 / self.weight

    @property
    def on_the_fly(self) -> bool:
        return self.W is None

    def weight_at(self, i: int, j: int, k: int) -> float:
        l = i + j - k
        n = self.grid.n_cells
        if not (0 <= l < n):
            return 0.0
        if self.W is not None:
            return float(self.W[i, j, k])
        return float(_kernels._lam(self.mho, self.k, i, j, k, l))

    def dump_csv(self, path) -> None:
        n = self.grid.n_cells
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("i", "j", "k", "W"))
            for i, j in itertools.product(range(n), repeat=2):
                for k in range(max(0, i + j - n + 1), min(n - 1, i + j) + 1):
                    w.writerow((i, j, k, repr(self.weight_at(i, j, k))))


def build_kernel_table(grid: Grid, model: DispersionModel, scale: float = 1.0,
                       mode: str = "auto", max_table_bytes: int = DEFAULT_MAX_TABLE_BYTES) -> KernelTable:
    """Precompute all admissible quadruple weights.

    ``mode`` is ``"table"``, ``"on-the-fly"`` or ``"auto"``; a table larger
    than ``max_table_bytes`` falls back to on-the-fly evaluation with a warning.
    """
    if grid.omega_max > model.omega_range_max:
        raise DomainError("grid extends beyond the tabulated dispersion range")
    w = grid.centers
    kv = np.ascontiguousarray(model.k_of_omega(w), dtype=float)
    mho = np.ascontiguousarray(model.mho(w), dtype=float)
    weight = kv * mho
    if np.any(weight <= 0):
        raise DomainError("|k| mho must be positive at every cell center")
    n = grid.n_cells
    nbytes = 8 * n**3
    if mode == "auto":
        mode = "table" if nbytes <= max_table_bytes else "on-the-fly"
    elif mode == "table" and nbytes > max_table_bytes:
        warnings.warn(f"kernel table of {nbytes / 2**20:.0f} MiB exceeds the memory threshold; "
                      "falling back to on-the-fly weights", RuntimeWarning, stacklevel=2)
        mode = "on-the-fly"
    if mode not in ("table", "on-the-fly"):
        raise DomainError(f"unknown kernel mode {mode!r}")
    W = _kernels.build_table(mho, kv) if mode == "table" else None
    for arr in (kv, mho, weight) + ((W,) if W is not None else ()):
        arr.setflags(write=False)
    return KernelTable(grid, model, mho, kv, weight, W, float(scale))


def distribution(F: np.ndarray, table: KernelTable) -> np.ndarray:
    """f = F / (|k| mho) at the cell centers."""
    return np.asarray(F, dtype=float) / table.weight


def rhs_array(F: np.ndarray, table: KernelTable) -> np.ndarray:
    """Strong-form right-hand side for a raw cell array (no validation)."""
    f = np.ascontiguousarray(F / table.weight)
    if table.W is not None:
        out = _kernels.rhs_table(f, table.W)
    else:
        out = _kernels.rhs_onthefly(f, table.mho, table.k)
    return out * (table.scale * table.grid.h_grid**2)


def rhs_magnitude(F: np.ndarray, table: KernelTable) -> np.ndarray:
    """Per-cell gain plus loss, the natural scale for cancellation checks."""
    f = np.ascontiguousarray(np.asarray(F, dtype=float) / table.weight)
    return _kernels.rhs_magnitude(f, table.mho, table.k) * (table.scale * table.grid.h_grid**2)


def collision_rhs(spectrum: Spectrum, table: KernelTable) -> np.ndarray:
    """Per-cell dF_i/dt of the strong form."""
    if spectrum.grid != table.grid:
        raise StateError("spectrum grid does not match kernel table grid")
    F = spectrum.F
    if not np.all(np.isfinite(F)) or np.any(F < 0):
        raise StateError("collision_rhs needs a finite nonnegative spectrum")
    return rhs_array(F, table)


def weak_rhs(spectrum: Spectrum, table: KernelTable, rho) -> float:
    """d/dt int F rho domega through the Max/Mid/Min symmetrized weak form.

    ``rho`` is a callable evaluated on ``[0, 2 omega_max]``; only the values at
    resonant fourth frequencies, which are cell centers, enter the sum.
    """
    g = spectrum.grid
    rho_vals = np.ascontiguousarray(np.asarray(rho(g.centers), dtype=float))
    f = np.ascontiguousarray(spectrum.F / table.weight)
    val = _kernels.weak_sorted(f, rho_vals, table.mho, table.k)
    return float(val * table.scale * g.h_grid**3)


def dissipation_D(spectrum: Spectrum, table: KernelTable) -> float:
    """Lower-bound dissipation density of ln(omega + 1) along the flow.

    Triple sum over ordered cells ``(i, j, k)`` with ``w_i + w_j - w_k >= 0``;
    triples whose completed interaction ``Max + Mid - Min`` leaves the grid
    are excluded, matching the truncated operator.
    """
    f = np.ascontiguousarray(spectrum.F / table.weight)
    w = spectrum.grid.centers
    return float(_kernels.dissipation(f, w, table.mho, table.k) * spectrum.grid.h_grid**3)


# -- independent oracles ----------------------------------------------------

BRUTE_FORCE_MAX_N = 64


def quadruple_lambda(model: DispersionModel, w0: float, w1: float, w2: float, w3: float) -> float:
    """Lam evaluated directly from the dispersion model at four frequencies."""
    ks = [model.k_of_omega(w) for w in (w0, w1, w2, w3)]
    prod = 1.0
    for w in (w0, w1, w2, w3):
        prod *= model.mho(w)
    return prod * min(ks)


def brute_force_rhs(spectrum: Spectrum, model: DispersionModel, scale: float = 1.0) -> np.ndarray:
    """Unsymmetrized triple loop with freshly evaluated weights and no table.

    Loops over the output partner ``l`` instead of ``k`` and accumulates gain
    and loss separately, so it shares no association order with the fast path.
    """
    g = spectrum.grid
    n = g.n_cells
    if n > BRUTE_FORCE_MAX_N:
        raise DomainError(f"brute_force_rhs is limited to n <= {BRUTE_FORCE_MAX_N}")
    w = g.centers
    f = [spectrum.F[i] / model.f_F_weight(w[i]) for i in range(n)]
    out = np.zeros(n)
    for i in range(n):
        gain = []
        loss = []
        for j in range(n):
            for l in range(n):
                k = i + j - l
                if not (0 <= k < n):
                    continue
                lam = quadruple_lambda(model, w[i], w[j], w[k], w[l])
                gain.append(lam * f[k] * f[l] * (f[i] + f[j]))
                loss.append(lam * f[i] * f[j] * (f[k] + f[l]))
        out[i] = (math.fsum(gain) - math.fsum(loss)) * g.h_grid**2 * scale
    return out


@dataclass
class OracleResult:
    r: tuple[float, float, float, float]
    value: float
    closed_form: float
    rel_error: float
    converged: bool
    truncation: float

    @property
    def general_closed_form(self) -> float:
        return sine_product_closed_form(self.r)


def sine_product_closed_form(r) -> float:
    """(pi/32) sum over signs of (-1)^(#minus + 1) |sum +-r_i|, valid for all r_i > 0.

    Equals (pi/4) min(r) whenever r_min + r_max <= the sum of the middle two.
    """
    total = 0.0
    for signs in itertools.product((1, -1), repeat=4):
        minus = sum(1 for s in signs if s < 0)
        total += (-1) ** (minus + 1) * abs(sum(s * x for s, x in zip(signs, r)))
    return math.pi / 32.0 * total


def min_kernel_oracle(r1: float, r2: float, r3: float, r4: float, tol: float = 1e-2,
                      truncation: float | None = None) -> OracleResult:
    """Quadrature of int_0^inf sin(r1 s) sin(r2 s) sin(r3 s) sin(r4 s) / s^2 ds.

    Truncated at ``S = 1e4 / min(r)`` and Richardson-extrapolated in the 1/S
    tail using the estimates at S and 2S.  Used only to validate the closed
    form (pi/4) min(r1, r2, r3, r4).
    """
    r = np.array([r1, r2, r3, r4], dtype=float)
    if np.any(r <= 0):
        raise DomainError("all wavenumbers must be > 0")
    S = truncation if truncation is not None else 1e4 / r.min()
    head = _sine_product_integral_range(r, 0.0, S)
    tail = _sine_product_integral_range(r, S, 2 * S)
    i_s, i_2s = head, head + tail
    value = 2.0 * i_2s - i_s
    closed = math.pi / 4.0 * r.min()
    rel = abs(value - closed) / closed
    converged = abs(i_2s - i_s) <= tol * abs(closed)
    return OracleResult(tuple(r), value, closed, rel, bool(converged), S)


def _sine_product_integral_range(r: np.ndarray, a: float, b: float, nodes: int = 16,
                                 chunk: int = 200_000) -> float:
    """Composite Gauss-Legendre over [a, b] with panels resolving the fastest mode."""
    fmax = float(np.sum(r))
    n_panels = int(math.ceil((b - a) * fmax / math.pi))
    panel = (b - a) / n_panels
    x, wq = np.polynomial.legendre.leggauss(nodes)
    x = 0.5 * (x + 1.0) * panel
    wq = 0.5 * wq * panel
    parts = []
    for start in range(0, n_panels, chunk):
        stop = min(n_panels, start + chunk)
        s = (a + np.arange(start, stop)[:, None] * panel + x[None, :]).ravel()
        g = np.sin(r[0] * s) * np.sin(r[1] * s) * np.sin(r[2] * s) * np.sin(r[3] * s) / (s * s)
        parts.append(float((g.reshape(-1, nodes) @ wq).sum()))
    return math.fsum(parts)


def admissible_quadruple(r) -> bool:
    """r_min + r_max <= sum of the middle two: the configurations reachable on the
    resonant manifold of a convex dispersion, where the min closed form holds."""
    a, b, c, d = sorted(r)
    return a + d <= b + c


def random_admissible_quadruples(rng: np.random.Generator, count: int, lo: float = 0.1,
                                 hi: float = 10.0) -> list[tuple[float, ...]]:
    out = []
    while len(out) < count:
        r = rng.uniform(lo, hi, size=4)
        if admissible_quadruple(r):
            out.append(tuple(float(x) for x in r))
    return out
