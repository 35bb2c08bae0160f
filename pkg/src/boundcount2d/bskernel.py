"""Nystrom discretization of the symmetrized zero-energy log kernel and its deflation."""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import ConfigurationError, EmptyActiveSetError
from .potential import Grid2D, SampledField
from .quadrature import cell_log_averages

TWO_PI = 2.0 * math.pi

# dense storage cap; 4096 nodes is a 64 x 64 grid with every node active
MAX_ACTIVE = 4096


@dataclass(frozen=True)
class KernelMatrix:
    """Symmetric matrix ``-(1/2pi) s_i s_j ln(k0 |x_i - x_j|)`` on the active nodes.

    ``s_i = sqrt(w V-(x_i))``; the diagonal uses the cell-rule mean of ln.
    """

    entries: np.ndarray
    active: np.ndarray
    s: np.ndarray
    k0: float
    h: float

    @property
    def M(self) -> int:
        return self.active.size

    def dump(self, path) -> None:
        """Row-major little-endian float64 with header (M: int64, k0, h: float64)."""
        with open(path, "wb") as fh:
            fh.write(struct.pack("<qdd", self.M, self.k0, self.h))
            fh.write(np.ascontiguousarray(self.entries, dtype="<f8").tobytes())

    @staticmethod
    def load_entries(path) -> tuple[np.ndarray, float, float]:
        with open(path, "rb") as fh:
            m, k0, h = struct.unpack("<qdd", fh.read(24))
            data = np.frombuffer(fh.read(), dtype="<f8")
        return data.reshape(m, m), k0, h


@dataclass(frozen=True)
class AVector:
    a: np.ndarray
    norm_sq_s: float


def _active(field: SampledField) -> np.ndarray:
    active = np.flatnonzero(field.values > 0)
    if active.size == 0:
        raise EmptyActiveSetError("V- vanishes on every node; nothing to discretize")
    return active


def _log_distance_matrix(grid: Grid2D, active: np.ndarray, k0: float) -> np.ndarray:
    pts = grid.nodes[active]
    dist = np.hypot(np.subtract.outer(pts[:, 0], pts[:, 0]), np.subtract.outer(pts[:, 1], pts[:, 1]))
    np.fill_diagonal(dist, 1.0)
    logs = np.log(k0 * dist)
    np.fill_diagonal(logs, cell_log_averages(grid.h, k0).diag_ln)
    return logs


def build_K(field: SampledField, k0: float = 1.0, max_active: int = MAX_ACTIVE) -> KernelMatrix:
    if not k0 > 0:
        raise ConfigurationError(f"k0 must be > 0, got {k0}")
    grid = field.grid
    active = _active(field)
    if active.size > max_active:
        raise ConfigurationError(
            f"{active.size} active nodes exceed the dense limit {max_active}; "
            "use a coarser grid or the matrix-free bound path")
    s = np.sqrt(grid.w * field.values[active])
    logs = _log_distance_matrix(grid, active, k0)
    entries = (-1.0 / TWO_PI) * (s[:, None] * s[None, :]) * logs
    # exact symmetry regardless of rounding in the product
    entries = 0.5 * (entries + entries.T)
    entries.setflags(write=False)
    return KernelMatrix(entries, active, s, float(k0), grid.h)


def build_a(field: SampledField, active: Optional[np.ndarray] = None) -> AVector:
    """Unit vector along ``sqrt(V-)`` on the active nodes."""
    if active is None:
        active = _active(field)
    wv = field.grid.w * field.values[active]
    norm_sq = math.fsum(wv)
    if not norm_sq > 0:
        raise EmptyActiveSetError("integral of V- is zero; the a-vector is undefined")
    a = np.sqrt(wv) / math.sqrt(norm_sq)
    a.setflags(write=False)
    return AVector(a, norm_sq)


def build_Kprime(K: KernelMatrix, a: AVector) -> KernelMatrix:
    """``K' = K - |b><a| - |a><b| + <a|K|a> |a><a|`` with ``b = K a``, so that ``K' a = 0``."""
    vec = a.a
    if vec.shape != (K.M,):
        raise ConfigurationError(f"a has length {vec.size}, kernel has {K.M} rows")
    b = K.entries @ vec
    c = float(vec @ b)
    kp = K.entries - np.outer(b, vec) - np.outer(vec, b) + c * np.outer(vec, vec)
    kp = 0.5 * (kp + kp.T)
    kp.setflags(write=False)
    return KernelMatrix(kp, K.active, K.s, K.k0, K.h)


def project_out(K: KernelMatrix, a: AVector) -> np.ndarray:
    """``P K P`` with ``P = 1 - |a><a|``; algebraically equal to K' (second code path)."""
    vec = a.a
    p = np.eye(K.M) - np.outer(vec, vec)
    return p @ K.entries @ p


def symmetric_eigenvalues(matrix) -> np.ndarray:
    """Full spectrum of a symmetric matrix, descending."""
    m = matrix.entries if isinstance(matrix, KernelMatrix) else np.asarray(matrix, dtype=float)
    if not np.all(np.isfinite(m)):
        raise ConfigurationError("matrix has non-finite entries")
    return np.linalg.eigvalsh(m)[::-1]


def symmetric_eigh(matrix) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs, eigenvalues descending; eigenvectors are the columns."""
    m = matrix.entries if isinstance(matrix, KernelMatrix) else np.asarray(matrix, dtype=float)
    if not np.all(np.isfinite(m)):
        raise ConfigurationError("matrix has non-finite entries")
    vals, vecs = np.linalg.eigh(m)
    return vals[::-1], vecs[:, ::-1]
