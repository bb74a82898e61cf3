"""Subdomain decompositions of [0, R) and the gap sets E, E'.

``Delta_i`` are the nonoverlapping cells, ``Xi_i`` the overlapping
three-cell windows and ``I_i`` the neighbour index sets.  The inclusion
chain ``E ⊆ U{Delta_ijl : max >= mid > min + 1} ⊆ E'`` is checked with exact
rational arithmetic so boundary cases are never decided by rounding.  The
first inclusion needs R/h to be an integer: otherwise the last cell is wider
than h and a pair of adjacent indices can span a gap above 2h.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..errors import DomainError


def mid3(x, y, z):
    """Middle element of the sorted triple (sorted-middle convention for ties)."""
    return sorted((x, y, z))[1]


def sort3(a, b, c) -> tuple:
    """(Min, Mid, Max) of three values."""
    lo, mid, hi = sorted((a, b, c))
    return lo, mid, hi


def subdomain_count(R: float, h: float) -> int:
    """floor(R / h); quotients within 1e-12 of an integer snap to it."""
    if not (h > 0 and R > 0):
        raise DomainError("need R > 0 and h > 0")
    if h >= R:
        raise DomainError(f"subdomain size h={h} must be < R={R}")
    q = R / h
    k = round(q)
    if abs(q - k) <= 1e-12 * q:
        return int(k)
    return int(math.floor(q))


@dataclass(frozen=True)
class DecompositionSpec:
    R: float
    h: float

    def __post_init__(self):
        if self.N < 3:
            raise DomainError(f"decomposition needs at least 3 subdomains, got {self.N}")

    @property
    def N(self) -> int:
        return subdomain_count(self.R, self.h)

    @property
    def Rq(self) -> Fraction:
        """R read as its shortest decimal (0.1 means 1/10), for exact comparisons."""
        return Fraction(repr(float(self.R)))

    @property
    def hq(self) -> Fraction:
        return Fraction(repr(float(self.h)))

    def delta_exact(self, i: int) -> tuple[Fraction, Fraction]:
        N, h = self.N, self.hq
        return i * h, (self.Rq if i == N - 1 else (i + 1) * h)

    def delta(self, i: int) -> tuple[float, float]:
        N, h = self.N, self.h
        if not 0 <= i < N:
            raise DomainError(f"Delta index {i} outside [0, {N})")
        if i == N - 1:
            return (N - 1) * h, self.R
        return i * h, (i + 1) * h

    def xi(self, i: int) -> tuple[float, float]:
        N, h = self.N, self.h
        if not 0 <= i < N:
            raise DomainError(f"Xi index {i} outside [0, {N})")
        if i == N - 1:
            return (N - 2) * h, self.R
        if i == N - 2:
            return (N - 3) * h, self.R
        if i == 0:
            return 0.0, 2 * h
        return (i - 1) * h, (i + 2) * h

    def neighbors(self, i: int) -> tuple[int, ...]:
        N = self.N
        if not 0 <= i < N:
            raise DomainError(f"index {i} outside [0, {N})")
        if i == 0:
            return (0, 1)
        if i == N - 1:
            return (N - 2, N - 1)
        return (i - 1, i, i + 1)

    def delta_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        b = np.array([self.delta(i) for i in range(self.N)])
        return b[:, 0], b[:, 1]

    def xi_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        b = np.array([self.xi(i) for i in range(self.N)])
        return b[:, 0], b[:, 1]

    def cell_index(self, w) -> int:
        """Index of the Delta cell holding ``w`` (exact comparison against i*h)."""
        N = self.N
        wq, hq = Fraction(w), self.hq
        if not (0 <= wq < self.Rq):
            raise DomainError(f"{w} outside [0, {self.R})")
        i = min(int(wq // hq), N - 1)
        return i


def in_E(triple, R: float, h: float, strict: str = "two-h") -> bool:
    """Membership of E_{R,h} (gap Mid - Min >= 2h) or E'_{R,h} (gap >= h).

    Values are read as their shortest decimals, so (0.4, 0.5) has gap exactly 0.1.
    """
    if strict not in ("two-h", "one-h"):
        raise DomainError(f"strict must be 'two-h' or 'one-h', got {strict!r}")
    vals = [Fraction(repr(float(x))) for x in triple]
    return _in_E_exact(vals, Fraction(repr(float(h))), 2 if strict == "two-h" else 1)


def _in_E_exact(triple, h: Fraction, k: int) -> bool:
    lo, mid, _ = sort3(*(Fraction(x) for x in triple))
    return mid - lo >= k * h


def in_index_union(indices) -> bool:
    """max >= mid > min + 1 on the sorted cell indices."""
    lo, mid, hi = sort3(*indices)
    return hi >= mid > lo + 1


@dataclass
class InclusionReport:
    R: float
    h: float
    N: int
    samples: int = 0
    in_E: int = 0
    in_union: int = 0
    violations_first: list = field(default_factory=list)
    violations_second: list = field(default_factory=list)
    index_level_passed: bool = True
    index_level_detail: str = ""

    @property
    def passed(self) -> bool:
        return not self.violations_first and not self.violations_second and self.index_level_passed

    def as_dict(self) -> dict:
        return {
            "R": self.R, "h": self.h, "N": self.N, "samples": self.samples,
            "count_in_E": self.in_E, "count_in_union": self.in_union,
            "violations_E_subset_union": len(self.violations_first),
            "violations_union_subset_Eprime": len(self.violations_second),
            "index_level_passed": self.index_level_passed,
            "index_level_detail": self.index_level_detail,
            "passed": self.passed,
        }


def adversarial_triples(spec: DecompositionSpec, rng: np.random.Generator, count: int) -> list[tuple]:
    """Triples placed on or one ulp beside subdomain boundaries, with gaps near h and 2h."""
    N, h = spec.N, spec.h
    out = []
    for _ in range(count):
        i = int(rng.integers(0, N))
        a = spec.delta(i)[0]
        gap = float(rng.choice([h, 2 * h, 3 * h]))
        b = a + gap
        nudge = rng.integers(-1, 2)
        if nudge:
            b = float(np.nextafter(b, np.inf if nudge > 0 else -np.inf))
        c = float(rng.uniform(b, spec.R)) if b < spec.R else b
        if not (0 <= a < spec.R and 0 <= b < spec.R and 0 <= c < spec.R):
            continue
        trip = [a, b, c]
        rng.shuffle(trip)
        out.append(tuple(trip))
    return out


def inclusion_check(spec: DecompositionSpec, sample_count: int = 10_000, seed: int = 0,
                    adversarial: int = 2_000) -> InclusionReport:
    """Test the chain on random real triples, boundary triples and every index triple."""
    rng = np.random.default_rng(seed)
    rep = InclusionReport(spec.R, spec.h, spec.N)
    hq = spec.hq
    triples = [tuple(float(x) for x in rng.uniform(0.0, spec.R, 3)) for _ in range(sample_count)]
    triples += adversarial_triples(spec, rng, adversarial)
    for trip in triples:
        e = _in_E_exact(trip, hq, 2)
        u = in_index_union([spec.cell_index(w) for w in trip])
        rep.samples += 1
        rep.in_E += e
        rep.in_union += u
        if e and not u:
            rep.violations_first.append(trip)
        if u and not _in_E_exact(trip, hq, 1):
            rep.violations_second.append(trip)
    ok, detail = index_level_check(spec)
    rep.index_level_passed, rep.index_level_detail = ok, detail
    return rep


def index_level_check(spec: DecompositionSpec) -> tuple[bool, str]:
    """Exhaustive check over index triples of the gap range attainable in each box.

    A box in the union must have infimum gap >= h; a box outside it must
    have supremum gap <= 2h (cells are half-open, so the supremum is not
    attained).  Requires O(N^3) work.
    """
    N = spec.N
    lo_edge = [spec.delta_exact(i)[0] for i in range(N)]
    hi_edge = [spec.delta_exact(i)[1] for i in range(N)]
    hq = spec.hq
    for a, b, c in itertools.combinations_with_replacement(range(N), 3):
        # a <= b <= c are the sorted indices; the Min point sits in cell a and
        # the Mid point in cell b
        if a == b:
            inf_gap = Fraction(0)
            sup_gap = hi_edge[a] - lo_edge[a]
        else:
            inf_gap = lo_edge[b] - hi_edge[a]
            sup_gap = hi_edge[b] - lo_edge[a]
        if in_index_union((a, b, c)):
            if inf_gap < hq:
                return False, f"box {(a, b, c)} in the union has gap down to {float(inf_gap)} < h"
        elif sup_gap > 2 * hq:
            return False, f"box {(a, b, c)} outside the union reaches gap {float(sup_gap)} > 2h"
    return True, f"all {math.comb(N + 2, 3)} sorted index triples consistent"
