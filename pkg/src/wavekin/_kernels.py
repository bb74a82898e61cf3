"""Compiled inner loops for the collision sums.

Every loop runs in a fixed index order with Neumaier-compensated
accumulation per output cell, so results are bit-reproducible.  The strong
form parallelizes over output cells only; each cell's sum is private, so the
result does not depend on the thread count.
"""

import os

import numba
import numpy as np
from numba import njit, prange

if "NUMBA_THREADING_LAYER" not in os.environ:
    # skip the TBB probe, which warns on older TBB installs
    numba.config.THREADING_LAYER = "omp"


def set_threads(count: int | None = None) -> int:
    """Set the collision-sum thread count (default: WAVEKIN_THREADS or all cores)."""
    if count is None:
        env = os.environ.get("WAVEKIN_THREADS")
        count = int(env) if env else numba.config.NUMBA_NUM_THREADS
    count = max(1, min(int(count), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(count)
    return count


@njit(cache=True)
def _lam(mho, kv, i, j, k, l):
    m = kv[i]
    if kv[j] < m:
        m = kv[j]
    if kv[k] < m:
        m = kv[k]
    if kv[l] < m:
        m = kv[l]
    return mho[i] * mho[j] * mho[k] * mho[l] * m


@njit(cache=True)
def build_table(mho, kv):
    n = mho.size
    W = np.zeros((n, n, n))
    for i in range(n):
        for j in range(n):
            s = i + j
            for k in range(max(0, s - n + 1), min(n - 1, s) + 1):
                W[i, j, k] = _lam(mho, kv, i, j, k, s - k)
    return W


@njit(cache=True, parallel=True)
def rhs_table(f, W):
    n = f.size
    out = np.zeros(n)
    for i in prange(n):
        fi = f[i]
        acc = 0.0
        comp = 0.0
        for j in range(n):
            fj = f[j]
            s = i + j
            for k in range(max(0, s - n + 1), min(n - 1, s) + 1):
                fk = f[k]
                fl = f[s - k]
                term = W[i, j, k] * (fk * fl * (fi + fj) - fi * fj * (fk + fl))
                t = acc + term
                if abs(acc) >= abs(term):
                    comp += (acc - t) + term
                else:
                    comp += (term - t) + acc
                acc = t
        out[i] = acc + comp
    return out


@njit(cache=True, parallel=True)
def rhs_onthefly(f, mho, kv):
    n = f.size
    out = np.zeros(n)
    for i in prange(n):
        fi = f[i]
        acc = 0.0
        comp = 0.0
        for j in range(n):
            fj = f[j]
            s = i + j
            for k in range(max(0, s - n + 1), min(n - 1, s) + 1):
                l = s - k
                fk = f[k]
                fl = f[l]
                term = _lam(mho, kv, i, j, k, l) * (fk * fl * (fi + fj) - fi * fj * (fk + fl))
                t = acc + term
                if abs(acc) >= abs(term):
                    comp += (acc - t) + term
                else:
                    comp += (term - t) + acc
                acc = t
        out[i] = acc + comp
    return out


@njit(cache=True)
def weak_sorted(f, rho, mho, kv):
    """Sum over sorted triples a <= b <= c of f_a f_b f_c times the three
    role brackets (output = Min, Mid, Max), each weighted by the number of
    ordered input pairs and dropped when its fourth index leaves the grid."""
    n = f.size
    acc = 0.0
    comp = 0.0
    for a in range(n):
        for b in range(a, n):
            for c in range(b, n):
                tri = f[a] * f[b] * f[c]
                if tri == 0.0:
                    continue
                val = 0.0
                # inputs (Max, Min) -> outputs Mid and Max + Min - Mid
                if a < b < c:
                    l = a + c - b
                    val += 2.0 * _lam(mho, kv, c, a, b, l) * (-rho[c] - rho[a] + rho[b] + rho[l])
                # inputs (Max, Mid) -> outputs Min and Max + Mid - Min
                l = c + b - a
                if l < n:
                    mult = 1.0 if b == c else 2.0
                    val += mult * _lam(mho, kv, c, b, a, l) * (-rho[c] - rho[b] + rho[a] + rho[l])
                # inputs (Min, Mid) -> outputs Max and Min + Mid - Max
                l = a + b - c
                if l >= 0:
                    mult = 1.0 if a == b else 2.0
                    val += mult * _lam(mho, kv, a, b, c, l) * (-rho[a] - rho[b] + rho[c] + rho[l])
                term = tri * val
                t = acc + term
                if abs(acc) >= abs(term):
                    comp += (acc - t) + term
                else:
                    comp += (term - t) + acc
                acc = t
    return acc + comp


@njit(cache=True)
def dissipation(f, w, mho, kv):
    n = f.size
    acc = 0.0
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if i + j - k < 0:
                    continue
                prod = f[i] * f[j] * f[k]
                if prod == 0.0:
                    continue
                lo = i
                mid = j
                hi = k
                if lo > mid:
                    lo, mid = mid, lo
                if mid > hi:
                    mid, hi = hi, mid
                if lo > mid:
                    lo, mid = mid, lo
                top = hi - lo + mid
                if top >= n or mid == lo:
                    continue
                gap = w[mid] - w[lo]
                q = (2.0 * w[mid] - w[lo]) ** 2 + 1.0
                acc += prod * mho[hi] * mho[lo] * mho[mid] * mho[top] * kv[lo] * gap * gap / q
    return acc


@njit(cache=True)
def rhs_magnitude(f, mho, kv):
    """Gain plus loss per output cell: the scale against which the bracket cancels."""
    n = f.size
    out = np.zeros(n)
    for i in range(n):
        fi = f[i]
        acc = 0.0
        for j in range(n):
            fj = f[j]
            s = i + j
            for k in range(max(0, s - n + 1), min(n - 1, s) + 1):
                fk = f[k]
                fl = f[s - k]
                acc += _lam(mho, kv, i, j, k, s - k) * (fk * fl * (fi + fj) + fi * fj * (fk + fl))
        out[i] = acc
    return out
