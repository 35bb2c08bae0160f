"""Grid quadrature for log and log^2 singular pair integrals, plus 1D radial rules.

Pair sums over a uniform grid are discrete convolutions with a table of the
kernel on node offsets, evaluated by FFT.  The zero-offset entry of each table
is the exact mean of the kernel over the disk of area h^2 (the cell rule).
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.signal import fftconvolve

from .exceptions import ConfigurationError
from .potential import Grid2D, SampledField


@dataclass(frozen=True)
class CellRule:
    """Disk means of ln(k0 r) and ln^2(k0 r) over the equal-area disk of a cell."""

    h: float
    k0: float
    diag_ln: float
    diag_lnsq: float

    @property
    def rho(self) -> float:
        return self.h / math.sqrt(math.pi)


def cell_log_averages(h: float, k0: float) -> CellRule:
    if not (h > 0 and k0 > 0):
        raise ConfigurationError(f"cell rule needs h > 0 and k0 > 0, got h={h}, k0={k0}")
    ell = math.log(k0 * h / math.sqrt(math.pi))
    return CellRule(h, k0, ell - 0.5, ell * ell - ell + 0.5)


def _disk_mean_split(rho: float) -> tuple[float, float]:
    """Means of (ln- r)^2 and (ln+ r)^2 over the disk of radius rho (k0 = 1)."""
    # antiderivative of 2 r ln^2 r is r^2 (ln^2 r - ln r + 1/2); equals 1/2 at r = 1
    def prim(r):
        lr = math.log(r)
        return r * r * (lr * lr - lr + 0.5)

    if rho <= 1.0:
        return prim(rho) / rho**2, 0.0
    return 0.5 / rho**2, (prim(rho) - 0.5) / rho**2


def ln_minus(t):
    """-ln t for t < 1, else 0."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(t < 1.0, -np.log(t), 0.0)


def ln_plus(t):
    """ln t for t >= 1, else 0."""
    t = np.asarray(t, dtype=float)
    return np.where(t >= 1.0, np.log(np.maximum(t, 1.0)), 0.0)


def offset_distances(grid: Grid2D) -> np.ndarray:
    """|x_i - x_j| for every node offset, shape (2n - 1, 2n - 1), centre at [n - 1, n - 1]."""
    k = np.arange(-(grid.n - 1), grid.n)
    return grid.h * np.hypot(k[:, None], k[None, :])


def kernel_table(grid: Grid2D, kind: str, k0: float = 1.0) -> np.ndarray:
    """Offset table for one of the log kernels.

    kinds: ``ln`` (ln k0 r), ``lnsq`` (ln^2 k0 r), ``ln_squared_diag`` (ln^2 k0 r off
    the diagonal, (disk mean of ln)^2 on it, i.e. the square of the ``ln`` table),
    ``lnminus_sq`` and ``lnplus_sq`` ((ln-)^2 and (ln+)^2 of r, k0 ignored).
    """
    d = offset_distances(grid)
    c = grid.n - 1
    d[c, c] = 1.0
    rule = cell_log_averages(grid.h, k0)
    if kind == "ln":
        tab = np.log(k0 * d)
        tab[c, c] = rule.diag_ln
    elif kind == "lnsq":
        tab = np.log(k0 * d) ** 2
        tab[c, c] = rule.diag_lnsq
    elif kind == "ln_squared_diag":
        tab = np.log(k0 * d) ** 2
        tab[c, c] = rule.diag_ln ** 2
    elif kind in ("lnminus_sq", "lnplus_sq"):
        lnd = np.log(d)
        if kind == "lnminus_sq":
            tab = np.where(d < 1.0, lnd, 0.0) ** 2
            tab[c, c] = _disk_mean_split(rule.rho)[0]
        else:
            tab = np.where(d >= 1.0, lnd, 0.0) ** 2
            tab[c, c] = _disk_mean_split(rule.rho)[1]
    else:
        raise ConfigurationError(f"unknown kernel table {kind!r}")
    return tab


def convolve_table(table: np.ndarray, image: np.ndarray) -> np.ndarray:
    """``out[i] = sum_j table[i - j] * image[j]`` on the n x n grid."""
    return fftconvolve(table, image, mode="valid")


def pair_sum(a_img: np.ndarray, b_img: np.ndarray, table: np.ndarray) -> float:
    """Symmetrized ``sum_ij A_i T(i - j) B_j``; swapping A and B gives the identical float."""
    ab = float(np.sum(a_img * convolve_table(table, b_img)))
    ba = float(np.sum(b_img * convolve_table(table, a_img)))
    return 0.5 * (ab + ba)


def _check_same_grid(fa: SampledField, fb: SampledField) -> Grid2D:
    if fa.grid != fb.grid:
        raise ConfigurationError("pair integrals need both fields on the same grid")
    return fa.grid


def pair_integral(field_a: SampledField, field_b: SampledField, kind: str, k0: float = 1.0) -> float:
    """Double integral of A(x) kernel(|x - y|) B(y) by the grid rule (weights w^2 included)."""
    grid = _check_same_grid(field_a, field_b)
    tab = kernel_table(grid, kind, k0)
    return pair_sum(field_a.image, field_b.image, tab) * grid.w**2


def pair_integral_logsq(field_a: SampledField, field_b: SampledField, k0: float = 1.0) -> float:
    """Integral of A(x) ln^2(k0|x - y|) B(y) over the plane, cell-rule diagonal."""
    if not k0 > 0:
        raise ConfigurationError(f"k0 must be > 0, got {k0}")
    return pair_integral(field_a, field_b, "lnsq", k0)


def pair_integral_log(field_a: SampledField, field_b: SampledField, k0: float = 1.0) -> float:
    """Integral of A(x) ln(k0|x - y|) B(y) over the plane, cell-rule diagonal."""
    if not k0 > 0:
        raise ConfigurationError(f"k0 must be > 0, got {k0}")
    return pair_integral(field_a, field_b, "ln", k0)


# --- 1D adaptive Gauss-Kronrod (7/15) panels -------------------------------

_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GW = np.zeros(15)
_GW[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


class QuadResult(NamedTuple):
    value: float
    abserr: float
    finite: bool


def _panel(func, a, b):
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    fx = np.asarray(func(mid + half * _NODES), dtype=float)
    k = half * float(np.dot(_KW, fx))
    g = half * float(np.dot(_GW, fx))
    return k, abs(k - g), bool(np.all(np.isfinite(fx)))


def adaptive_quad(func: Callable, a: float, b: float, *, rtol: float = 1e-8, atol: float = 0.0,
                  breakpoints: Sequence[float] = (), max_panels: int = 20000) -> QuadResult:
    """Adaptive 15-point Kronrod quadrature of a vectorized ``func`` over ``[a, b]``.

    Panels with the largest error estimate are bisected first; ties go to the
    leftmost panel, so the panel sequence is deterministic.
    """
    if not b > a:
        return QuadResult(0.0, 0.0, True)
    cuts = [a] + sorted(p for p in breakpoints if a < p < b) + [b]
    heap = []
    total = err = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        v, e, ok = _panel(func, lo, hi)
        if not ok:
            return QuadResult(math.inf, math.inf, False)
        heapq.heappush(heap, (-e, lo, hi, v))
        total += v
        err += e
    while err > max(rtol * abs(total), atol) and len(heap) < max_panels:
        neg_e, lo, hi, v = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            heapq.heappush(heap, (neg_e, lo, hi, v))
            break
        v1, e1, ok1 = _panel(func, lo, mid)
        v2, e2, ok2 = _panel(func, mid, hi)
        if not (ok1 and ok2):
            return QuadResult(math.inf, math.inf, False)
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
        total += v1 + v2 - v
        err += e1 + e2 + neg_e
    total = math.fsum(item[3] for item in heap)
    err = math.fsum(-item[0] for item in heap)
    return QuadResult(total, err, math.isfinite(total))


RADIAL_WEIGHTS: dict[str, Callable] = {
    "one": lambda r: np.ones_like(r),
    "ln_minus": ln_minus,
    "ln_plus_sq": lambda r: ln_plus(r) ** 2,
    "ln2p_sq": lambda r: np.log(2.0 + r) ** 2,
}


def radial_integral(f: Callable, weight: str = "one", r_range: tuple[float, float] = (0.0, 1.0), *,
                    rtol: float = 1e-8, breakpoints: Sequence[float] = ()) -> QuadResult:
    """``2 pi * int r f(r) weight(r) dr`` over ``r_range`` (the d^2x integral of a radial function)."""
    try:
        wfun = RADIAL_WEIGHTS[weight]
    except KeyError:
        raise ConfigurationError(f"unknown radial weight {weight!r}; choose from {sorted(RADIAL_WEIGHTS)}") from None
    lo, hi = r_range
    bps = list(breakpoints)
    if weight in ("ln_minus", "ln_plus_sq"):
        bps.append(1.0)

    def integrand(r):
        return 2.0 * math.pi * r * np.asarray(f(r), dtype=float) * wfun(r)

    return adaptive_quad(integrand, lo, hi, rtol=rtol, breakpoints=bps)
