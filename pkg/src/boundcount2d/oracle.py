"""Independent bound-state counts: finite-difference spectra, radial Sturm counting,
coupling-constant trajectories and the deflated-kernel threshold diagnostic."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.optimize import linear_sum_assignment
from scipy.sparse.linalg import eigsh

from .bskernel import KernelMatrix, symmetric_eigenvalues
from .exceptions import ConfigurationError
from .potential import (
    PotentialSpec,
    evaluate,
    is_central,
    radial_breakpoints,
    support_radius,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SpectralCount:
    count: int
    eigenvalues: np.ndarray
    n: int
    L: float
    tol_E: float
    converged: Optional[bool] = None
    history: tuple = ()


def _fd_axis(L: float, n: int) -> tuple[np.ndarray, float]:
    h = 2.0 * L / (n + 1)
    return -L + h * np.arange(1, n + 1), h


def _sampled_potential(spec: PotentialSpec, L: float, n: int, g: float, subsample: int) -> np.ndarray:
    """Cell-averaged g V on the interior nodes; ``subsample`` points per axis per cell."""
    x, h = _fd_axis(L, n)
    offs = ((np.arange(subsample) + 0.5) / subsample - 0.5) * h
    total = np.zeros((n, n))
    for ox in offs:
        for oy in offs:
            X, Y = np.meshgrid(x + ox, x + oy, indexing="ij")
            total += evaluate(spec, np.stack([X, Y], axis=-1))
    return g * total / subsample**2


def fd_hamiltonian(spec: PotentialSpec, L: float, n: int, g: float = 1.0, subsample: int = 3) -> sp.csr_matrix:
    """5-point Dirichlet Laplacian on the n x n interior of [-L, L]^2, plus g V."""
    _, h = _fd_axis(L, n)
    main = np.full(n, 2.0 / h**2)
    off = np.full(n - 1, -1.0 / h**2)
    lap1 = sp.diags([off, main, off], [-1, 0, 1])
    eye = sp.identity(n)
    lap = sp.kron(lap1, eye) + sp.kron(eye, lap1)
    pot = _sampled_potential(spec, L, n, g, subsample).ravel()
    return (lap + sp.diags(pot)).tocsc()


def default_tol_E(spec: PotentialSpec, L: float, n: int, g: float = 1.0) -> float:
    """Ten times an h^2-scaled floor, ``1e-3 h^2 max|g V|``."""
    _, h = _fd_axis(L, n)
    vmax = float(np.max(np.abs(_sampled_potential(spec, L, n, g, 1))))
    return 10.0 * 1e-3 * h * h * max(vmax, 1.0)


def lowest_eigenpairs(H: sp.spmatrix, k: int, shift: float) -> tuple[np.ndarray, np.ndarray]:
    k = min(k, H.shape[0] - 2)
    v0 = np.ones(H.shape[0])
    vals, vecs = eigsh(H, k=k, sigma=shift, which="LM", v0=v0, tol=1e-12)
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


def _negative_spectrum(H, shift, tol_E, k_start=8):
    k = k_start
    while True:
        vals, vecs = lowest_eigenpairs(H, k, shift)
        if vals[-1] >= -tol_E or k >= H.shape[0] - 2:
            return vals, vecs
        k *= 2


def fd_negative_count(spec: PotentialSpec, L_box: float, n: int, g: float = 1.0,
                      tol_E: Optional[float] = None, subsample: int = 3) -> SpectralCount:
    """Number of eigenvalues below ``-tol_E`` of -Laplacian + g V in the Dirichlet box."""
    if n < 32:
        raise ConfigurationError(f"finite-difference oracle needs n >= 32, got {n}")
    if not L_box > 0:
        raise ConfigurationError("box half-width must be positive")
    if tol_E is None:
        tol_E = default_tol_E(spec, L_box, n, g)
    H = fd_hamiltonian(spec, L_box, n, g, subsample)
    pot_min = float(H.diagonal().min()) - 8.0 / (2.0 * L_box / (n + 1)) ** 2
    vals, _ = _negative_spectrum(H, pot_min - 1.0, tol_E)
    neg = vals[vals < -tol_E]
    return SpectralCount(int(neg.size), neg, n, float(L_box), float(tol_E))


def converged_count(spec: PotentialSpec, L_box: float, n: int, g: float = 1.0,
                    levels: int = 3, subsample: int = 3) -> SpectralCount:
    """Scan (n, L), (1.5 n, 1.25 L), ...; converged once two consecutive counts agree."""
    history = []
    prev = None
    cur_n, cur_L = n, L_box
    for _ in range(levels):
        res = fd_negative_count(spec, cur_L, cur_n, g, subsample=subsample)
        history.append((res.n, res.L, res.count))
        if prev is not None and prev.count == res.count:
            return SpectralCount(res.count, res.eigenvalues, res.n, res.L, res.tol_E, True, tuple(history))
        prev = res
        cur_n, cur_L = int(round(1.5 * cur_n)), 1.25 * cur_L
    logger.warning("finite-difference count not converged: %s", history)
    return SpectralCount(prev.count, prev.eigenvalues, prev.n, prev.L, prev.tol_E, False, tuple(history))


# --- radial Sturm counting --------------------------------------------------

def _channel_nodes(spec: PotentialSpec, m: int, g: float, r_out: float, breakpoints) -> int:
    """Bound states with angular momentum m (one sign) from the zero-energy Pruefer phase.

    With R = rho sin(theta), r R' = rho cos(theta) and t = ln r the radial equation
    (r R')' + (-g V r - m^2/r) R = 0 becomes
    theta' = cos^2 theta + (-g V r^2 - m^2) sin^2 theta.
    """
    scale = r_out
    r0 = 1e-8 * scale
    theta0 = math.pi / 2 if m == 0 else math.atan(1.0 / m)

    def rhs(t, y):
        r = math.exp(t)
        v = float(evaluate(spec, (r, 0.0))) * g
        s = math.sin(y[0])
        c = math.cos(y[0])
        return [c * c + (-v * r * r - m * m) * s * s]

    cuts = [math.log(r0)] + [math.log(b) for b in sorted(breakpoints) if r0 < b < r_out] + [math.log(r_out)]
    theta = theta0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        sol = solve_ivp(rhs, (lo, hi), [theta], method="DOP853", rtol=1e-11, atol=1e-12)
        if not sol.success:
            raise RuntimeError(f"radial integration failed: {sol.message}")
        theta = float(sol.y[0, -1])
    inside = math.floor(theta / math.pi)
    # outside the support R = A r^m + B r^-m (m > 0) or A + B ln r (m = 0); with
    # u = tan(theta) = R / (r R') a further zero lies beyond r_out iff -1/m < u < 0
    u = math.tan(theta)
    lower = -math.inf if m == 0 else -1.0 / m
    tail = 1 if lower < u < 0 else 0
    return inside + tail


def radial_count(spec: PotentialSpec, m_max: int = 40, g: float = 1.0, r_out: Optional[float] = None) -> int:
    """Total bound states of a central potential, summing channels |m| = 0, 1, ...

    Channels with m != 0 count twice; the sum stops after two empty channels.
    """
    if not is_central(spec):
        raise ConfigurationError("radial counting needs a central potential")
    if m_max < 0:
        raise ConfigurationError("m_max must be >= 0")
    r_out = support_radius(spec) * 1.0 + 1e-9 if r_out is None else r_out
    bps = radial_breakpoints(spec)
    total = 0
    empty = 0
    for m in range(m_max + 1):
        c = _channel_nodes(spec, m, g, r_out, bps)
        total += c if m == 0 else 2 * c
        empty = empty + 1 if c == 0 else 0
        if empty >= 2:
            return total
    raise ConfigurationError(f"channels up to m_max={m_max} still bind; raise m_max")


# --- coupling-constant trajectories -----------------------------------------

@dataclass
class Trajectory:
    branch_id: int
    g: list = field(default_factory=list)
    E: list = field(default_factory=list)
    fh_derivative: list = field(default_factory=list)

    def zero_crossing(self) -> Optional[float]:
        """Coupling g_i where E(g_i) = 0, by linear interpolation, if bracketed."""
        for (g1, e1), (g2, e2) in zip(zip(self.g, self.E), zip(self.g[1:], self.E[1:])):
            if e1 >= 0 > e2:
                return g1 + (g2 - g1) * e1 / (e1 - e2)
        return None


def _group_overlap(raw: np.ndarray, vals: np.ndarray, rel_gap: float = 1e-7) -> np.ndarray:
    """|<prev_i|new_j>| pooled over degenerate groups of new levels.

    Inside a degenerate group the eigenvectors are an arbitrary basis, so the
    overlap of a previous vector with the whole group is what identifies it.
    """
    scale = max(float(np.max(np.abs(vals))), 1.0)
    groups = np.zeros(vals.size, dtype=int)
    for j in range(1, vals.size):
        groups[j] = groups[j - 1] + (vals[j] - vals[j - 1] > rel_gap * scale)
    pooled = np.empty_like(raw)
    for gid in np.unique(groups):
        cols = groups == gid
        pooled[:, cols] = np.sqrt(np.sum(raw[:, cols] ** 2, axis=1))[:, None]
    return pooled


def trajectories(spec: PotentialSpec, g_list: Sequence[float], L_box: float, n: int, k: int = 6,
                 subsample: int = 3, overlap_min: float = 0.5) -> dict:
    """Follow the lowest ``k`` levels of -Laplacian + g V across ascending ``g_list``.

    Branches are continued by maximal eigenvector overlap; a weak best overlap
    closes a branch and opens a new one, and the interval is flagged.  Only
    branches that become bound are returned, starting one step before their
    energy turns negative.  For each point the Feynman-Hellmann derivative
    <psi|V|psi> is stored next to E.
    """
    g_list = [float(g) for g in g_list]
    if len(g_list) < 4 or any(b <= a for a, b in zip(g_list, g_list[1:])):
        raise ConfigurationError("g_list must be ascending with at least 4 points")
    H0 = fd_hamiltonian(spec, L_box, n, 0.0, subsample)
    vpot = _sampled_potential(spec, L_box, n, 1.0, subsample).ravel()
    V = sp.diags(vpot)
    shift_base = -float(np.max(np.abs(vpot))) * max(g_list) - 1.0

    branches: list[Trajectory] = []
    prev_vecs = None
    prev_ids = None
    flagged = []
    for g in g_list:
        H = (H0 + g * V).tocsc()
        vals, vecs = lowest_eigenpairs(H, k, shift_base)
        fh = np.einsum("ij,i,ij->j", vecs, vpot, vecs)
        if prev_vecs is None:
            ids = []
            for j in range(vals.size):
                branches.append(Trajectory(len(branches)))
                ids.append(len(branches) - 1)
        else:
            overlap = _group_overlap(prev_vecs.T @ vecs, vals)
            rows, cols = linear_sum_assignment(-overlap)
            ids = [None] * vals.size
            for r, c in zip(rows, cols):
                if overlap[r, c] >= overlap_min:
                    ids[c] = prev_ids[r]
                else:
                    flagged.append((prev_g, g))
            for j in range(vals.size):
                if ids[j] is None:
                    branches.append(Trajectory(len(branches)))
                    ids[j] = len(branches) - 1
        for j, bid in enumerate(ids):
            br = branches[bid]
            br.g.append(g)
            br.E.append(float(vals[j]))
            br.fh_derivative.append(float(fh[j]))
        prev_vecs, prev_ids, prev_g = vecs, ids, g

    # a trajectory starts at the last box level before its energy turns negative
    tracked = []
    for b in branches:
        neg = [i for i, e in enumerate(b.E) if e < 0]
        if not neg:
            continue
        start = max(neg[0] - 1, 0)
        tracked.append(Trajectory(len(tracked), b.g[start:], b.E[start:], b.fh_derivative[start:]))

    monotone = all(np.all(np.diff(t.E) < 0) for t in tracked)
    fh_errors = []
    for t in tracked:
        for i in range(1, len(t.g) - 1):
            if max(t.E[i - 1:i + 2]) >= 0:
                continue
            fd = (t.E[i + 1] - t.E[i - 1]) / (t.g[i + 1] - t.g[i - 1])
            fh_errors.append(abs(fd - t.fh_derivative[i]) / abs(t.fh_derivative[i]))
    return {"branches": tracked, "monotone": monotone, "fh_max_rel_error": max(fh_errors, default=0.0),
            "fh_errors": fh_errors, "flagged_intervals": sorted(set(flagged)),
            "g_thresholds": [t.zero_crossing() for t in tracked]}


def trajectory_rows(branches: Iterable[Trajectory]) -> list[tuple[float, int, float]]:
    """``(g, branch_id, E)`` rows sorted by branch then coupling."""
    rows = [(g, b.branch_id, e) for b in branches for g, e in zip(b.g, b.E)]
    return sorted(rows, key=lambda r: (r[1], r[0]))


def write_trajectories_csv(branches: Iterable[Trajectory], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["g", "branch_id", "E"])
        for g, bid, e in trajectory_rows(branches):
            writer.writerow([repr(g), bid, repr(e)])


# --- deflated-kernel diagnostic ----------------------------------------------

def bs_coupling_diagnostic(Kprime: KernelMatrix, g_cap: float = 1e6) -> list[float]:
    """Coupling thresholds ``1/lambda`` for the positive eigenvalues of K', descending lambda."""
    lam = symmetric_eigenvalues(Kprime)
    lam = lam[lam > 1.0 / g_cap]
    return [1.0 / x for x in lam]


def bs_count(Kprime: KernelMatrix, g: float = 1.0) -> int:
    """``#{lambda(K') >= 1/g} + 1``: the deflated-kernel estimate of the number of bound states."""
    lam = symmetric_eigenvalues(Kprime)
    return int(np.count_nonzero(lam * g >= 1.0)) + 1
