"""Circular decreasing rearrangement of sampled fields and the inequalities it obeys."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .exceptions import ConfigurationError
from .potential import Grid2D, SampledField
from .quadrature import offset_distances, pair_sum


@dataclass(frozen=True)
class RadialProfile:
    """Step profile: ``values[k]`` holds on the annulus ``radii[k-1] <= r < radii[k]``.

    Every annulus has the cell area ``h^2``, so ``pi * radii[k]^2 = (k + 1) h^2``.
    """

    radii: np.ndarray
    values: np.ndarray
    area: float

    @property
    def inner_radii(self) -> np.ndarray:
        return np.concatenate([[0.0], self.radii[:-1]])

    @property
    def mass(self) -> float:
        return math.fsum(self.values * self.area)

    def __call__(self, r) -> np.ndarray:
        """Evaluate the step function at radii ``r`` (zero beyond the last annulus)."""
        r = np.asarray(r, dtype=float)
        idx = np.searchsorted(self.radii, r, side="right")
        padded = np.concatenate([self.values, [0.0]])
        return padded[np.minimum(idx, self.values.size)]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["r_outer", "value"])
            for r, v in zip(self.radii, self.values):
                writer.writerow([repr(float(r)), repr(float(v))])


def rearrange(field: SampledField) -> RadialProfile:
    """Sort the cell values in decreasing order onto equal-area annuli.

    Zero cells are kept and fill the outer annuli; ties keep node-index order.
    """
    grid = field.grid
    order = np.argsort(-field.values, kind="stable")
    k = np.arange(1, field.values.size + 1)
    radii = np.sqrt(k * grid.w / math.pi)
    vals = field.values[order]
    vals.setflags(write=False)
    radii.setflags(write=False)
    return RadialProfile(radii, vals, grid.w)


def rearranged_field(field: SampledField) -> SampledField:
    """The rearrangement laid back on the grid: k-th largest value on the k-th closest node.

    Nodes are ranked by distance from the origin, ties by node index.
    """
    grid = field.grid
    by_distance = np.argsort(grid.radii, kind="stable")
    by_value = np.argsort(-field.values, kind="stable")
    out = np.empty_like(field.values)
    out[by_distance] = field.values[by_value]
    return SampledField(grid, out)


def equimeasure_check(field: SampledField, profile: RadialProfile, levels: Sequence[float]) -> list[dict]:
    """Measures of ``{V- > A}`` and ``{V_R > A}`` per level; ``mismatch`` is their difference."""
    if profile.values.size != field.values.size:
        raise ConfigurationError("profile was not built from this field (size mismatch)")
    rows = []
    for level in levels:
        m_field = np.count_nonzero(field.values > level) * field.grid.w
        m_profile = np.count_nonzero(profile.values > level) * profile.area
        rows.append({"level": float(level), "field": m_field, "profile": m_profile,
                     "mismatch": m_field - m_profile})
    return rows


@dataclass(frozen=True)
class RadialKernel:
    """A non-negative function B(|x - y|) together with its cell-mean rule on the diagonal."""

    func: Callable[[np.ndarray], np.ndarray]
    cell_mean: Optional[Callable[[float], float]] = None

    def table(self, grid: Grid2D) -> np.ndarray:
        d = offset_distances(grid)
        c = grid.n - 1
        d[c, c] = 1.0
        tab = np.asarray(self.func(d), dtype=float)
        tab[c, c] = self.cell_mean(grid.h) if self.cell_mean else float(self.func(np.array(0.0)))
        return tab

    def check_decreasing(self, grid: Grid2D) -> None:
        d = np.unique(offset_distances(grid))[1:]
        vals = np.asarray(self.func(d), dtype=float)
        diag = self.table(grid)[grid.n - 1, grid.n - 1]
        if np.any(vals < 0) or np.any(np.diff(vals) > 0) or diag < vals[0]:
            raise ConfigurationError("kernel must be non-negative and non-increasing in |x - y|")


def lnminus_sq_kernel() -> RadialKernel:
    """(ln- |x - y|)^2, its own decreasing rearrangement."""
    def func(r):
        with np.errstate(divide="ignore"):
            return np.where(r < 1.0, np.log(r), 0.0) ** 2

    def cell_mean(h):
        rho = h / math.sqrt(math.pi)
        top = min(rho, 1.0)
        lr = math.log(top)
        return top * top * (lr * lr - lr + 0.5) / rho**2

    return RadialKernel(func, cell_mean)


def indicator_kernel(radius: float) -> RadialKernel:
    """1 for |x - y| < radius."""
    def cell_mean(h):
        rho = h / math.sqrt(math.pi)
        return min(1.0, (radius / rho) ** 2)

    return RadialKernel(lambda r: (np.asarray(r) < radius).astype(float), cell_mean)


def luttinger_check(field_a: SampledField, kernel: RadialKernel, field_c: SampledField) -> tuple[float, float]:
    """Both sides of the rearrangement inequality for ``A(x) B(|x - y|) C(y)``.

    Returns ``(lhs, rhs)`` with the rearranged fields concentric at the origin.
    """
    if field_a.grid != field_c.grid:
        raise ConfigurationError("A and C must share a grid")
    grid = field_a.grid
    kernel.check_decreasing(grid)
    tab = kernel.table(grid)
    lhs = pair_sum(field_a.image, field_c.image, tab) * grid.w**2
    a_r = rearranged_field(field_a)
    c_r = rearranged_field(field_c)
    rhs = pair_sum(a_r.image, c_r.image, tab) * grid.w**2
    return lhs, rhs


def hardy_littlewood(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """``(sum sorted(a) * sorted(b), sum a * b)``; the first is never smaller."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return math.fsum(np.sort(a) * np.sort(b)), math.fsum(a * b)


def increasing_weight_pair(field: SampledField, profile: RadialProfile,
                           phi: Callable[[np.ndarray], np.ndarray]) -> tuple[float, float]:
    """``(int V_R phi, int V- phi)`` for a radial weight ``phi`` increasing in |x|."""
    rearranged = math.fsum(profile.values * phi(profile.radii) * profile.area)
    original = math.fsum(field.values * phi(field.grid.radii) * field.grid.w)
    return rearranged, original
