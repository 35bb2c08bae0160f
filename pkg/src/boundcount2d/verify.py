"""Invariant checks run by ``verify appendix`` and ``verify all``.

Each check returns a :class:`Check`; a suite passes when every check does.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping, Optional

import numpy as np

from .bound import bound_terms, compute_bound, g_scaling_check, k0_invariance_scan, regularized
from .bskernel import MAX_ACTIVE, build_a, build_K, build_Kprime, project_out
from .conditions import (
    angular_log_closed_form,
    angular_log_quadrature,
    classify_a17,
    condition_integrals,
    expected_a17_regime,
)
from .oracle import converged_count, radial_count
from .potential import Grid2D, PotentialSpec, SampledField, default_half_width, is_central, sample_negative_part
from .rearrangement import indicator_kernel, lnminus_sq_kernel, luttinger_check


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _rel(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale > 0 else 0.0


def _field(spec: PotentialSpec, n: int, L: Optional[float]) -> SampledField:
    return sample_negative_part(spec, Grid2D(default_half_width(spec) if L is None else L, n))


# --- appendix-level checks ---------------------------------------------------

def check_angular_identity(pairs: int = 20, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(pairs):
        rx = rng.uniform(0.05, 5.0)
        ry = rng.uniform(0.0, rx)
        worst = max(worst, abs(angular_log_closed_form(rx, ry) - angular_log_quadrature(rx, ry)))
    rx = 1.7
    limit = 4.0 * math.log(rx) ** 2 + math.pi**2 / 3.0
    lim_err = max(abs(angular_log_closed_form(rx, rx * (1.0 - t)) - limit) for t in (1e-12, 1e-14))
    return [Check("angular_identity", worst <= 1e-8, worst, 1e-8, f"{pairs} random pairs"),
            Check("angular_limit", lim_err <= 1e-9, lim_err, 1e-9, "ry -> rx")]


def _random_field(grid: Grid2D, rng) -> SampledField:
    vals = rng.random(grid.n * grid.n) * (rng.random(grid.n * grid.n) < rng.uniform(0.2, 1.0))
    return SampledField(grid, vals)


def check_luttinger(trials: int = 20, seed: int = 0, n: int = 24) -> list[Check]:
    rng = np.random.default_rng(seed)
    grid = Grid2D(2.0, n)
    kernels = [lnminus_sq_kernel(), indicator_kernel(1.0)]
    worst = -math.inf
    for t in range(trials):
        a, c = _random_field(grid, rng), _random_field(grid, rng)
        lhs, rhs = luttinger_check(a, kernels[t % 2], c)
        worst = max(worst, lhs / rhs - 1.0)
    # concentric radial-decreasing fields are their own rearrangements
    r = grid.radii
    a = SampledField(grid, np.exp(-r * r))
    c = SampledField(grid, np.maximum(1.5 - r, 0.0))
    lhs, rhs = luttinger_check(a, kernels[0], c)
    eq = _rel(lhs, rhs)
    return [Check("luttinger_inequality", worst <= 1e-8, worst, 1e-8, "max lhs/rhs - 1"),
            Check("luttinger_equality", eq <= 1e-8, eq, 1e-8, "concentric radial fields")]


def check_appendix_chain(name: str, field: SampledField) -> list[Check]:
    rep = condition_integrals(field)
    split = _rel(rep.I, rep.I_plus + rep.I_minus)
    finite = all(v == "finite" for v in rep.flags.values())
    out = [Check(f"{name}:I_split", split <= 1e-10, split, 1e-10)]
    if finite:
        out.append(Check(f"{name}:I_plus_bound", rep.I_plus <= rep.rhs_A8, rep.I_plus / rep.rhs_A8, 1.0))
        out.append(Check(f"{name}:I_minus_bound", rep.I_minus <= rep.rhs_A14, rep.I_minus / rep.rhs_A14, 1.0))
    return out


def appendix_suite(potentials: Mapping[str, PotentialSpec], n: int = 64, L: Optional[float] = None) -> list[Check]:
    checks = check_angular_identity() + check_luttinger()
    for name, spec in potentials.items():
        field = _field(spec, n, L)
        if field.mass > 0:
            checks += check_appendix_chain(name, field)
    return checks


# --- kernel and bound checks -------------------------------------------------

def check_kernel_identities(name: str, field: SampledField, k0_list=(0.1, 0.5, 1.0, 2.0, 10.0)) -> list[Check]:
    field = regularized(field)
    if field.mass == 0:
        return []
    method = "dense" if np.count_nonzero(field.values) <= MAX_ACTIVE else "fft"
    scan = k0_invariance_scan(field, k0_list, method=method)
    out = [Check(f"{name}:k0_invariance", scan["deviation_total"] <= 1e-10, scan["deviation_total"], 1e-10)]
    if method == "dense":
        K = build_K(field)
        a = build_a(field, K.active)
        t1, t2, t3 = bound_terms(K, a)
        kp = build_Kprime(K, a)
        resid = float(np.linalg.norm(kp.entries @ a.a)) / float(np.linalg.norm(K.entries))
        formula = t1 - 2.0 * t2 + t3 * t3
        tr_a = float(np.sum(kp.entries ** 2))
        tr_b = float(np.sum(project_out(K, a) ** 2))
        dev = max(_rel(tr_a, formula), _rel(tr_b, formula))
        out += [Check(f"{name}:deflation_residual", resid <= 1e-12, resid, 1e-12),
                Check(f"{name}:deflation_trace", dev <= 1e-10, dev, 1e-10),
                Check(f"{name}:cauchy_schwarz", t2 >= t3 * t3, t2 - t3 * t3, 0.0, "T2 - T3^2"),
                Check(f"{name}:total_below_1_plus_N_I", t2 >= t3 * t3, (t1 - t2) - (t1 - 2 * t2 + t3 * t3), 0.0,
                      "N_I bound + 1 - N_total bound")]
        gs = g_scaling_check((t1, t2, t3), (0.1, 1.0, 10.0, 100.0))
        out.append(Check(f"{name}:g_scaling", gs["deviation"] <= 1e-12, gs["deviation"], 1e-12))
    return out


def check_main_inequality(name: str, spec: PotentialSpec, g_list: Iterable[float], n: int = 64,
                          L: Optional[float] = None, n_box: int = 96, L_box: Optional[float] = None) -> list[Check]:
    L_box = 2.0 * default_half_width(spec) if L_box is None else L_box
    out = []
    for g in g_list:
        rep = compute_bound(spec, n=n, L=L, g=g)
        fd = converged_count(spec, L_box, n_box, g)
        counts = [fd.count]
        if is_central(spec):
            counts.append(radial_count(spec, g=g))
        worst = max(counts)
        out.append(Check(f"{name}:bound@g={g!r}", rep.N_total_bound >= worst,
                         rep.N_total_bound - worst, 0.0, f"oracle counts {counts}"))
    return out


def check_a17(gammas=(0.4, 0.75, 1.5)) -> list[Check]:
    out = []
    for gamma in gammas:
        got = classify_a17(gamma)
        want = expected_a17_regime(gamma)
        ok = got["I"] == want["I"] and got["A3"] == want["A3"]
        out.append(Check(f"a17:gamma={gamma!r}", ok, float(ok), 1.0,
                         f"I: {got['I']}, A3: {got['A3']}"))
    return out


def full_suite(potentials: Mapping[str, PotentialSpec], n: int = 64, L: Optional[float] = None,
               g_list=(0.5, 1.0, 5.0), n_box: int = 96, L_box: Optional[float] = None) -> list[Check]:
    checks = appendix_suite(potentials, n, L)
    for name, spec in potentials.items():
        checks += check_kernel_identities(name, _field(spec, n, L))
        checks += check_main_inequality(name, spec, g_list, n, L, n_box, L_box)
    return checks + check_a17()
