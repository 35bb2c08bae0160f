"""Integrability conditions for log-kernel bound-state counting and the chain of
upper bounds relating the non-linear condition to the two linear ones.

Notation: ``I`` is the double integral of V-(x) ln^2|x-y| V-(y); ``I_plus`` and
``I_minus`` split it with (ln+)^2 and (ln-)^2; ``L1`` is the integral of
(ln(2+|x|))^2 V-; ``L2`` is the integral of V_R ln-|x|, with V_R the circular
decreasing rearrangement.  The labels ``A2`` and ``A3`` name these two linear
conditions; ``rhs_A8`` and ``rhs_A14`` are the bounds on I_plus and I_minus.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import ConfigurationError, DomainError
from .potential import A17_SUPPORT, SampledField
from .quadrature import adaptive_quad, pair_integral
from .rearrangement import RadialProfile, rearrange

PI2 = math.pi**2


def dilog(z):
    """Real dilogarithm Li2(z) = sum z^n / n^2 for 0 <= z <= 1, to ~1e-15 relative.

    The series is summed directly for z <= 1/2; above that the reflection
    Li2(z) = pi^2/6 - ln z ln(1 - z) - Li2(1 - z) maps back into the fast range.
    """
    z = np.asarray(z, dtype=float)
    if np.any((z < 0) | (z > 1)):
        raise DomainError("dilog is implemented on [0, 1]")
    out = np.empty_like(z)
    low = z <= 0.5
    out[low] = _dilog_series(z[low])
    hi = ~low
    if np.any(hi):
        zh = z[hi]
        w = 1.0 - zh
        with np.errstate(divide="ignore", invalid="ignore"):
            cross = np.where(w > 0, np.log(zh) * np.log(np.where(w > 0, w, 1.0)), 0.0)
        out[hi] = PI2 / 6.0 - cross - _dilog_series(w)
    return out if out.ndim else float(out)


def _dilog_series(z: np.ndarray) -> np.ndarray:
    # 0.5^n / n^2 < 1e-17 relative to the leading term by n = 48
    total = np.zeros_like(z)
    power = np.ones_like(z)
    for k in range(1, 60):
        power = power * z
        total += power / (k * k)
    return total


def angular_log_closed_form(rx: float, ry: float) -> float:
    """Angular mean of (ln(rx^2 + ry^2 - 2 rx ry cos t))^2 for rx > ry >= 0.

    Equals 4 (ln rx)^2 + 2 Li2((ry/rx)^2); the supremum over ry < rx is
    4 (ln rx)^2 + pi^2/3.
    """
    if not (rx > 0 and 0 <= ry < rx):
        raise DomainError(f"need rx > ry >= 0, got rx={rx}, ry={ry}")
    return 4.0 * math.log(rx) ** 2 + 2.0 * dilog((ry / rx) ** 2)


def angular_log_quadrature(rx: float, ry: float, rtol: float = 1e-13) -> float:
    """The same angular mean by direct adaptive quadrature over t (independent check)."""
    def integrand(t):
        # |x - y|^2 written without cancellation near t = 0
        return np.log((rx - ry) ** 2 + 4.0 * rx * ry * np.sin(0.5 * t) ** 2) ** 2

    # symmetric in t; the log singularity (ry = rx) sits at the endpoint t = 0
    res = adaptive_quad(integrand, 0.0, math.pi, rtol=rtol, atol=1e-15, max_panels=200000)
    return res.value / math.pi


@dataclass(frozen=True)
class ConditionReport:
    I: float
    I_plus: float
    I_minus: float
    L1: float
    L2: float
    mass: float
    rhs_A8: float
    rhs_A14: float
    flags: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _annulus_ln_minus(profile: RadialProfile) -> np.ndarray:
    """Exact integral of ln-|x| over every annulus of the profile."""
    def prim(r):
        r = np.minimum(r, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(r > 0, math.pi * r * r * (0.5 - np.log(np.where(r > 0, r, 1.0))), 0.0)

    return prim(profile.radii) - prim(profile.inner_radii)


def linear_conditions(field: SampledField, profile: RadialProfile) -> tuple[float, float, float]:
    """``(L1, L2, mass)`` on the grid; L2 integrates ln- exactly over each annulus."""
    if profile.values.size != field.values.size:
        raise ConfigurationError("profile was not built from this field")
    w = field.grid.w
    mass = math.fsum(field.values * w)
    l1 = math.fsum(np.log(2.0 + field.grid.radii) ** 2 * field.values * w)
    l2 = math.fsum(profile.values * _annulus_ln_minus(profile))
    return l1, l2, mass


def appendix_bounds(field: SampledField, profile: Optional[RadialProfile] = None) -> tuple[float, float]:
    """Upper bounds for I_plus and I_minus from the linear conditions.

    rhs_A8  = 4 M L1
    rhs_A14 = 16 pi^2 L2^2 + 32 pi^2 M L1 + (4 pi^4 / 3) M^2,  M = mass of V-.
    """
    profile = rearrange(field) if profile is None else profile
    l1, l2, mass = linear_conditions(field, profile)
    rhs8 = 4.0 * mass * l1
    rhs14 = 16.0 * PI2 * l2 * l2 + 32.0 * PI2 * mass * l1 + (4.0 * PI2 * PI2 / 3.0) * mass * mass
    return rhs8, rhs14


def condition_integrals(field: SampledField, profile: Optional[RadialProfile] = None) -> ConditionReport:
    profile = rearrange(field) if profile is None else profile
    with np.errstate(over="ignore", invalid="ignore"):
        total = pair_integral(field, field, "lnsq", 1.0)
        plus = pair_integral(field, field, "lnplus_sq")
        minus = pair_integral(field, field, "lnminus_sq")
        l1, l2, mass = linear_conditions(field, profile)
        rhs8, rhs14 = appendix_bounds(field, profile)
    flags = {name: ("finite" if math.isfinite(val) else "divergent")
             for name, val in (("I", total), ("A2", l1), ("A3", l2))}
    return ConditionReport(total, plus, minus, l1, l2, mass, rhs8, rhs14, flags)


# --- the a17 family: radial reductions in u = ln|ln r| ----------------------

A17_U0 = math.log(math.log(1.0 / A17_SUPPORT))


def a17_mass_density(u, gamma: float):
    """2 pi r V-(r) dr expressed per unit u: 2 pi e^-u u^-gamma."""
    u = np.asarray(u, dtype=float)
    return 2.0 * math.pi * np.exp(-u) * u ** (-gamma)


def a17_A3_partial(gamma: float, u_cut: float) -> float:
    """Integral of V- ln-|x| over r >= exp(-e^u_cut): 2 pi times the integral of u^-gamma."""
    res = adaptive_quad(lambda u: 2.0 * math.pi * u ** (-gamma), A17_U0, u_cut, rtol=1e-12)
    return res.value


def a17_A3_closed_form(gamma: float, u_cut: float) -> float:
    if gamma == 1.0:
        return 2.0 * math.pi * (math.log(u_cut) - math.log(A17_U0))
    return 2.0 * math.pi * (u_cut ** (1 - gamma) - A17_U0 ** (1 - gamma)) / (1 - gamma)


def a17_I_partial(gamma: float, u_cut: float, rtol: float = 1e-9) -> float:
    """I restricted to r, s >= exp(-e^u_cut), using the exact angular average.

    With ux < uy (|x| > |y|) the angular mean of ln^2|x - y| is
    (ln|x|)^2 + Li2((|y|/|x|)^2) / 2, and in s = uy - ux the pair density
    becomes (2 pi)^2 ux^-g (ux + s)^-g [e^-s + e^(-2ux - s) Li2(z) / 2]
    with z = exp(2 e^ux (1 - e^s)).
    """
    four_pi_sq = 4.0 * PI2

    def inner(ux):
        def f(s):
            z = np.exp(2.0 * math.exp(ux) * (1.0 - np.exp(s)))
            return (ux + s) ** (-gamma) * (np.exp(-s) + 0.5 * np.exp(-2.0 * ux - s) * dilog(z))
        span = u_cut - ux
        return adaptive_quad(f, 0.0, span, rtol=rtol * 0.1, breakpoints=[min(1.0, span / 2)]).value

    def outer(ux):
        ux = np.atleast_1d(ux)
        return np.array([four_pi_sq * x ** (-gamma) * inner(x) for x in ux])

    return 2.0 * adaptive_quad(outer, A17_U0, u_cut, rtol=rtol).value


DEFAULT_CUTOFFS_U = (25.0 / 16, 25.0 / 8, 25.0 / 4, 25.0 / 2, 25.0)


def _verdict(partials: Sequence[float], threshold: float) -> tuple[str, list[float]]:
    inc = np.diff(partials)
    ratios = (inc[1:] / inc[:-1]).tolist()
    verdict = "convergent" if ratios[-1] < threshold else "divergent"
    return verdict, ratios


def classify_a17(gamma: float, cutoffs_u: Sequence[float] = DEFAULT_CUTOFFS_U, threshold: float = 0.9) -> dict:
    """Numerical convergence verdicts for I and the ``A3`` (L2) integral of the a17 family.

    ``cutoffs_u`` are inner cutoffs in u = ln|ln r| (r = exp(-e^u), so increasing
    u means decreasing radius), roughly doubling.  Each integral is evaluated up
    to every cutoff; when the ratio of the last two successive increments is
    below ``threshold`` the increments decay geometrically and the verdict is
    convergent, otherwise divergent.  This is a numerical verdict only.
    """
    if not gamma > 0:
        raise ConfigurationError("gamma must be > 0")
    cutoffs_u = [float(u) for u in cutoffs_u]
    if len(cutoffs_u) < 4:
        raise ConfigurationError("the cutoff scan needs at least 4 cutoffs")
    if any(b <= a for a, b in zip(cutoffs_u, cutoffs_u[1:])) or cutoffs_u[0] <= A17_U0:
        raise ConfigurationError(f"cutoffs in u must increase and exceed {A17_U0:.4f}")
    i_part = [a17_I_partial(gamma, u) for u in cutoffs_u]
    a3_part = [a17_A3_partial(gamma, u) for u in cutoffs_u]
    i_verdict, i_ratios = _verdict(i_part, threshold)
    a3_verdict, a3_ratios = _verdict(a3_part, threshold)
    rows = [{"gamma": gamma, "cutoff_u": u, "I_partial": ip, "A3_partial": ap,
             "I_verdict": i_verdict, "A3_verdict": a3_verdict}
            for u, ip, ap in zip(cutoffs_u, i_part, a3_part)]
    return {"gamma": gamma, "I": i_verdict, "A3": a3_verdict, "I_ratios": i_ratios,
            "A3_ratios": a3_ratios, "rows": rows}


def expected_a17_regime(gamma: float) -> dict:
    """Analytic classification: I converges iff gamma > 1/2, ``A3`` iff gamma > 1."""
    return {"I": "convergent" if gamma > 0.5 else "divergent",
            "A3": "convergent" if gamma > 1.0 else "divergent"}


def write_a17_csv(results: Sequence[dict], path) -> None:
    cols = ["gamma", "cutoff_u", "I_partial", "A3_partial", "I_verdict", "A3_verdict"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
        writer.writeheader()
        for res in results:
            for row in res["rows"]:
                writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
