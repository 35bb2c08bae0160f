"""Trace terms of the symmetrized log kernel and the assembled bound-state bounds.

With ``T1 = tr K^2``, ``T2 = <a|K^2|a>`` and ``T3 = <a|K|a>``::

    N_I bound      = T1 - T2
    N_total bound  = 1 + T1 - 2 T2 + T3^2

Both combinations are unchanged when the scale k0 inside ln(k0 |x - y|) changes.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize_scalar

from .bskernel import MAX_ACTIVE, AVector, KernelMatrix, build_a, build_K
from .exceptions import ConfigurationError
from .potential import (
    Grid2D,
    PotentialSpec,
    SampledField,
    default_half_width,
    epsilon_regularize,
    sample_negative_part,
)
from .quadrature import convolve_table, kernel_table, pair_sum

FOUR_PI_SQ = 4.0 * math.pi**2

REPORT_FIELDS = ("T1", "T2", "T3", "N_I_bound", "N_total_bound", "k0", "n", "L", "eps", "mu",
                 "g", "int_V", "int_Vminus")


@dataclass(frozen=True)
class BoundReport:
    T1: float
    T2: float
    T3: float
    N_I_bound: float
    N_total_bound: float
    k0: float = 1.0
    n: Optional[int] = None
    L: Optional[float] = None
    eps: float = 0.0
    mu: float = 0.0
    g: float = 1.0
    int_V: Optional[float] = None
    int_Vminus: Optional[float] = None

    @property
    def attractive(self) -> Optional[bool]:
        """Whether the integral of V is negative (the +1 state is then guaranteed)."""
        return None if self.int_V is None else self.int_V < 0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        doc = self.to_dict()
        writer.writerow(REPORT_FIELDS)
        writer.writerow(["" if doc[k] is None else repr(doc[k]) for k in REPORT_FIELDS])
        return buf.getvalue()


def bound_terms(K: KernelMatrix, a: AVector) -> tuple[float, float, float]:
    """``(tr K^2, |K a|^2, a.K a)`` from the dense matrix."""
    if a.a.shape != (K.M,):
        raise ConfigurationError("kernel and a-vector sizes differ")
    b = K.entries @ a.a
    t1 = float(np.sum(K.entries * K.entries))
    t2 = float(b @ b)
    t3 = float(a.a @ b)
    if not all(map(math.isfinite, (t1, t2, t3))):
        raise ConfigurationError("non-finite trace terms")
    return t1, t2, t3


def bound_terms_fft(field: SampledField, k0: float = 1.0) -> tuple[float, float, float]:
    """The same three terms without forming K, by FFT convolution over the grid."""
    grid = field.grid
    mass_img = field.image * grid.w
    sigma = math.fsum(mass_img.ravel())
    if sigma == 0:
        return 0.0, 0.0, 0.0
    t1 = pair_sum(mass_img, mass_img, kernel_table(grid, "ln_squared_diag", k0)) / FOUR_PI_SQ
    conv = convolve_table(kernel_table(grid, "ln", k0), mass_img)
    t2 = float(np.sum(mass_img * conv * conv)) / (FOUR_PI_SQ * sigma)
    t3 = -float(np.sum(mass_img * conv)) / (2.0 * math.pi * sigma)
    return t1, t2, t3


def n_I_rewrite(field: SampledField, k0: float = 1.0) -> float:
    """N_I bound as one triple integral of V-(x) V-(y) V-(z) against
    ``ln^2 k0|x-y| - ln k0|x-z| ln k0|y-z|``, divided by ``(2 pi)^2`` and the mass."""
    grid = field.grid
    mass_img = field.image * grid.w
    sigma = math.fsum(mass_img.ravel())
    if sigma == 0:
        return 0.0
    first = sigma * pair_sum(mass_img, mass_img, kernel_table(grid, "ln_squared_diag", k0))
    conv = convolve_table(kernel_table(grid, "ln", k0), mass_img)
    second = float(np.sum(mass_img * conv * conv))
    return (first - second) / (FOUR_PI_SQ * sigma)


def assemble_bounds(terms: Sequence[float], g: float = 1.0, **meta) -> BoundReport:
    """Scale the terms to coupling ``g`` (T1, T2 by g^2, T3 by g) and assemble the bounds.

    The +1 for the state that binds at arbitrarily weak coupling is always added.
    """
    t1, t2, t3 = (float(t) for t in terms)
    g = float(g)
    t1, t2, t3 = g * g * t1, g * g * t2, g * t3
    return BoundReport(t1, t2, t3, t1 - t2, 1.0 + t1 - 2.0 * t2 + t3 * t3, g=g, **meta)


def regularized(field: SampledField, eps: Union[str, float, None] = "auto",
                mu: Optional[float] = None) -> SampledField:
    """Apply the positive floor; ``eps='auto'`` is 1e-10 max V-, ``mu`` defaults to 1/L."""
    if eps is None or eps == 0 or field.mass == 0:
        return field
    if eps == "auto":
        eps = 1e-10 * float(np.max(field.values))
    mu = 1.0 / field.grid.L if mu is None else mu
    return epsilon_regularize(field, float(eps), float(mu))


def compute_bound(potential: Union[PotentialSpec, SampledField], *, n: int = 64,
                  L: Optional[float] = None, k0: float = 1.0, eps: Union[str, float, None] = "auto",
                  mu: Optional[float] = None, g: float = 1.0, method: str = "auto") -> BoundReport:
    """Sample, regularize, discretize and assemble the bound for one potential.

    ``method`` is ``dense`` (explicit K), ``fft`` (matrix-free) or ``auto``
    (dense up to the dense-storage cap).
    """
    if isinstance(potential, PotentialSpec):
        grid = Grid2D(default_half_width(potential) if L is None else L, n)
        raw = sample_negative_part(potential, grid)
    else:
        raw = potential
    field = regularized(raw, eps, mu)
    meta = dict(k0=float(k0), n=field.grid.n, L=field.grid.L,
                eps=field.epsilon_floor[0] if field.epsilon_floor else 0.0,
                mu=field.epsilon_floor[1] if field.epsilon_floor else 0.0,
                int_V=raw.int_V, int_Vminus=raw.mass)
    if field.mass == 0:
        return assemble_bounds((0.0, 0.0, 0.0), g, **meta)
    if method == "auto":
        method = "dense" if np.count_nonzero(field.values) <= MAX_ACTIVE else "fft"
    if method == "dense":
        K = build_K(field, k0)
        terms = bound_terms(K, build_a(field, K.active))
    elif method == "fft":
        terms = bound_terms_fft(field, k0)
    else:
        raise ConfigurationError(f"unknown method {method!r}")
    return assemble_bounds(terms, g, **meta)


def _invariant_parts(terms):
    t1, t2, t3 = terms
    return t1 - 2.0 * t2 + t3 * t3, t1 - t2


def k0_invariance_scan(field: SampledField, k0_list: Iterable[float], method: str = "dense") -> dict:
    """Recompute the terms at every scale; report max relative spread of the invariant combinations."""
    k0_list = [float(k) for k in k0_list]
    if len(k0_list) < 3 or max(k0_list) / min(k0_list) < 100.0:
        raise ConfigurationError("scan needs >= 3 scales spanning >= 2 decades")
    rows = []
    for k0 in k0_list:
        if method == "dense":
            K = build_K(field, k0)
            terms = bound_terms(K, build_a(field, K.active))
        else:
            terms = bound_terms_fft(field, k0)
        rows.append((k0, *terms))
    total = np.array([_invariant_parts(r[1:])[0] for r in rows])
    n_i = np.array([_invariant_parts(r[1:])[1] for r in rows])

    def spread(vals):
        ref = np.max(np.abs(vals))
        return float((vals.max() - vals.min()) / ref) if ref > 0 else 0.0

    return {"rows": rows, "deviation_total": spread(total), "deviation_N_I": spread(n_i),
            "deviation_T1": spread(np.array([r[1] for r in rows]))}


def g_scaling_check(terms: Sequence[float], g_list: Iterable[float]) -> dict:
    """``(N_total(g) - 1) / g^2`` across ``g_list``; its relative spread should be rounding only."""
    g_list = [float(g) for g in g_list]
    if any(g <= 0 for g in g_list):
        raise ConfigurationError("couplings must be positive")
    reports = [assemble_bounds(terms, g) for g in g_list]
    ratios = np.array([(r.N_total_bound - 1.0) / r.g**2 for r in reports])
    ref = np.max(np.abs(ratios))
    spread = float((ratios.max() - ratios.min()) / ref) if ref > 0 else 0.0
    return {"g": g_list, "N_total_bound": [r.N_total_bound for r in reports],
            "ratio": ratios.tolist(), "deviation": spread}


def minimize_scale(field: SampledField, g: float = 1.0, bracket: tuple[float, float] = (-10.0, 10.0)) -> dict:
    """Golden-section minimum over ln k0 of the scale-dependent bound ``1 + g^2 tr K(k0)^2``."""
    def objective(log_k0):
        return 1.0 + g * g * bound_terms_fft(field, math.exp(log_k0))[0]

    res = minimize_scalar(objective, bracket=bracket, method="golden", tol=1e-10)
    return {"k0_opt": math.exp(res.x), "bound": float(res.fun)}
