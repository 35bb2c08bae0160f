"""Declarative 2D potentials, uniform grids and sampled negative parts.

Units follow hbar^2/2m = 1, so the Schrodinger operator is -Laplacian + V.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence, Tuple

import numpy as np

from .exceptions import ConfigurationError, DomainError

FAMILIES = ("gaussian_wells", "circular_well", "a17_family", "sum_of_terms")

# support radius of the a17 family, 1/(2e)
A17_SUPPORT = 0.5 / math.e

# Gaussian tail: mass outside radius a*width is exp(-a^2); a^2 = ln(1e6) + margin
_GAUSS_TAIL = 3.8


@dataclass(frozen=True)
class PotentialSpec:
    """A named potential family with its parameters and a coupling ``g``.

    Build instances through :func:`make_family`, which validates ``params``.
    """

    family: str
    params: Mapping[str, Any]
    g: float = 1.0

    def to_dict(self) -> dict:
        return {"family": self.family, "params": _plain(self.params), "g": self.g}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "PotentialSpec":
        if not isinstance(doc, Mapping):
            raise ConfigurationError("potential must be a JSON object")
        unknown = set(doc) - {"family", "params", "g"}
        if unknown:
            raise ConfigurationError(f"unknown potential keys: {sorted(unknown)}")
        if "family" not in doc:
            raise ConfigurationError("potential needs a 'family'")
        return make_family(doc["family"], doc.get("params", {}), g=doc.get("g", 1.0))

    @classmethod
    def from_json(cls, text: str) -> "PotentialSpec":
        return cls.from_dict(json.loads(text))

    def with_coupling(self, g: float) -> "PotentialSpec":
        return make_family(self.family, self.params, g=g)


def _plain(obj):
    if isinstance(obj, Mapping):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _real(params, key, default=None, *, positive=False, nonneg=False):
    if key not in params:
        if default is None:
            raise ConfigurationError(f"missing parameter {key!r}")
        return float(default)
    try:
        val = float(params[key])
    except (TypeError, ValueError):
        raise ConfigurationError(f"parameter {key!r} must be a real number") from None
    if not math.isfinite(val):
        raise ConfigurationError(f"parameter {key!r} must be finite")
    if positive and val <= 0:
        raise ConfigurationError(f"parameter {key!r} must be > 0, got {val}")
    if nonneg and val < 0:
        raise ConfigurationError(f"parameter {key!r} must be >= 0, got {val}")
    return val


def _center(params) -> Tuple[float, float]:
    c = params.get("center", (0.0, 0.0))
    try:
        cx, cy = (float(v) for v in c)
    except (TypeError, ValueError):
        raise ConfigurationError("center must be a pair of reals") from None
    return (cx, cy)


def _check_keys(params, allowed, family):
    unknown = set(params) - set(allowed)
    if unknown:
        raise ConfigurationError(f"unknown parameters for {family}: {sorted(unknown)}")


def make_family(name: str, params: Optional[Mapping[str, Any]] = None, g: float = 1.0) -> PotentialSpec:
    """Validate ``params`` for family ``name`` and return a normalized spec.

    Parameter layouts::

        gaussian_wells  {"wells": [{"depth": V0, "width": w, "center": [x, y]}, ...]}
                        V = -sum V0 exp(-|x - c|^2 / w^2); negative depth is a bump
        circular_well   {"depth": V0, "radius": R, "center": [x, y]}
                        V = -V0 for |x - c| < R, else 0
        a17_family      {"gamma": gamma}
                        V = -1 / (r^2 ln^2 r (ln|ln r|)^gamma) for 0 < r < 1/(2e), else 0
        sum_of_terms    {"terms": [{"family": ..., "params": ..., "g": ...}, ...],
                         "constant": c}
    """
    params = dict(params or {})
    try:
        g = float(g)
    except (TypeError, ValueError):
        raise ConfigurationError("coupling g must be a real number") from None
    if not math.isfinite(g):
        raise ConfigurationError("coupling g must be finite")

    if name == "gaussian_wells":
        _check_keys(params, ("wells",), name)
        wells = params.get("wells")
        if not wells:
            raise ConfigurationError("gaussian_wells needs a non-empty 'wells' list")
        norm = []
        for well in wells:
            if not isinstance(well, Mapping):
                raise ConfigurationError("each well must be an object")
            _check_keys(well, ("depth", "width", "center"), "gaussian well")
            norm.append({
                "depth": _real(well, "depth"),
                "width": _real(well, "width", positive=True),
                "center": list(_center(well)),
            })
        out = {"wells": norm}
    elif name == "circular_well":
        _check_keys(params, ("depth", "radius", "center"), name)
        out = {
            "depth": _real(params, "depth"),
            "radius": _real(params, "radius", positive=True),
            "center": list(_center(params)),
        }
    elif name == "a17_family":
        _check_keys(params, ("gamma",), name)
        out = {"gamma": _real(params, "gamma", positive=True)}
    elif name == "sum_of_terms":
        _check_keys(params, ("terms", "constant"), name)
        terms = [PotentialSpec.from_dict(t) for t in params.get("terms", [])]
        out = {"terms": [t.to_dict() for t in terms], "constant": _real(params, "constant", 0.0)}
    else:
        raise ConfigurationError(f"unknown potential family {name!r}; expected one of {FAMILIES}")
    return PotentialSpec(name, out, g)


def _as_points(point) -> np.ndarray:
    pts = np.asarray(point, dtype=float)
    if pts.shape[-1:] != (2,):
        raise ConfigurationError("points must have a trailing axis of length 2")
    return pts


def _raw(spec: PotentialSpec, pts: np.ndarray) -> np.ndarray:
    p = spec.params
    fam = spec.family
    if fam == "gaussian_wells":
        v = np.zeros(pts.shape[:-1])
        for well in p["wells"]:
            c = np.asarray(well["center"])
            r2 = np.sum((pts - c) ** 2, axis=-1)
            v -= well["depth"] * np.exp(-r2 / well["width"] ** 2)
        return v
    if fam == "circular_well":
        r = np.hypot(pts[..., 0] - p["center"][0], pts[..., 1] - p["center"][1])
        return np.where(r < p["radius"], -p["depth"], 0.0)
    if fam == "a17_family":
        r = np.hypot(pts[..., 0], pts[..., 1])
        if np.any(r == 0):
            raise DomainError("a17_family is singular at r = 0")
        inside = r < A17_SUPPORT
        rr = np.where(inside, r, 0.5 * A17_SUPPORT)
        lnr = np.log(rr)
        val = -1.0 / (rr**2 * lnr**2 * np.log(-lnr) ** p["gamma"])
        return np.where(inside, val, 0.0)
    if fam == "sum_of_terms":
        v = np.full(pts.shape[:-1], p["constant"])
        for t in p["terms"]:
            v = v + evaluate(PotentialSpec.from_dict(t), pts)
        return v
    raise ConfigurationError(f"unknown potential family {fam!r}")


def evaluate(spec: PotentialSpec, point) -> np.ndarray | float:
    """Return ``g * V(point)``; ``point`` is ``(x, y)`` or an array ``(..., 2)``."""
    pts = _as_points(point)
    val = spec.g * _raw(spec, pts)
    return float(val) if pts.ndim == 1 else val


def is_central(spec: PotentialSpec) -> bool:
    """True when the potential depends on |x| only (every piece centred at the origin)."""
    p = spec.params
    if spec.family == "gaussian_wells":
        return all(w["center"] == [0.0, 0.0] for w in p["wells"])
    if spec.family == "circular_well":
        return p["center"] == [0.0, 0.0]
    if spec.family == "a17_family":
        return True
    return all(is_central(PotentialSpec.from_dict(t)) for t in p["terms"])


def radial_breakpoints(spec: PotentialSpec) -> list[float]:
    """Radii where a central potential is discontinuous."""
    if spec.family == "circular_well":
        return [spec.params["radius"]]
    if spec.family == "a17_family":
        return [A17_SUPPORT]
    if spec.family == "sum_of_terms":
        out = set()
        for t in spec.params["terms"]:
            out.update(radial_breakpoints(PotentialSpec.from_dict(t)))
        return sorted(out)
    return []


def support_radius(spec: PotentialSpec) -> float:
    """Radius around the origin outside which |V| is negligible (< 1e-15 of its peak)."""
    p = spec.params
    if spec.family == "gaussian_wells":
        return max(math.hypot(*w["center"]) + 6.0 * w["width"] for w in p["wells"])
    if spec.family == "circular_well":
        return math.hypot(*p["center"]) + p["radius"]
    if spec.family == "a17_family":
        return A17_SUPPORT
    radii = [support_radius(PotentialSpec.from_dict(t)) for t in p["terms"]]
    return max(radii) if radii else 0.0


def default_half_width(spec: PotentialSpec) -> float:
    """Box half-width that leaves < 1e-6 of the V- mass outside [-L, L]^2.

    gaussian_wells: max over wells of max(|cx|, |cy|) + 3.8 width;
    circular_well: max(|cx|, |cy|) + 1.05 R; a17_family: 1.05/(2e);
    sum_of_terms: max over terms (a negative constant has infinite mass and is rejected).
    """
    p = spec.params
    if spec.family == "gaussian_wells":
        return max(max(map(abs, w["center"])) + _GAUSS_TAIL * w["width"] for w in p["wells"])
    if spec.family == "circular_well":
        return max(map(abs, p["center"])) + 1.05 * p["radius"]
    if spec.family == "a17_family":
        return 1.05 * A17_SUPPORT
    if spec.g * p["constant"] < 0:
        raise ConfigurationError("an attractive constant term has infinite mass; give L explicitly")
    widths = [default_half_width(PotentialSpec.from_dict(t)) for t in p["terms"]]
    return max(widths) if widths else 1.0


def translate(spec: PotentialSpec, dx: float, dy: float) -> PotentialSpec:
    """Rigidly shift every centre of ``spec`` by ``(dx, dy)``."""
    p = _plain(spec.params)
    if spec.family == "gaussian_wells":
        for w in p["wells"]:
            w["center"] = [w["center"][0] + dx, w["center"][1] + dy]
    elif spec.family == "circular_well":
        p["center"] = [p["center"][0] + dx, p["center"][1] + dy]
    elif spec.family == "sum_of_terms":
        p["terms"] = [translate(PotentialSpec.from_dict(t), dx, dy).to_dict() for t in p["terms"]]
    else:
        raise ConfigurationError(f"{spec.family} is pinned to the origin and cannot be translated")
    return make_family(spec.family, p, g=spec.g)


@dataclass(frozen=True)
class Grid2D:
    """Cell centres of a uniform ``n x n`` partition of ``[-L, L]^2``.

    Flat node index ``k = ix * n + iy``; images are ``(n, n)`` arrays indexed ``[ix, iy]``.
    """

    L: float
    n: int

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ConfigurationError(f"grid half-width must be > 0, got {self.L}")
        if int(self.n) != self.n or self.n < 8:
            raise ConfigurationError(f"grid needs n >= 8 nodes per axis, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def w(self) -> float:
        return self.h * self.h

    @property
    def axis(self) -> np.ndarray:
        return -self.L + (np.arange(self.n) + 0.5) * self.h

    @property
    def nodes(self) -> np.ndarray:
        x = self.axis
        X, Y = np.meshgrid(x, x, indexing="ij")
        return np.stack([X.ravel(), Y.ravel()], axis=-1)

    @property
    def radii(self) -> np.ndarray:
        nodes = self.nodes
        return np.hypot(nodes[:, 0], nodes[:, 1])

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.n * self.n, self.w)


def _frozen(arr) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SampledField:
    """Values of V- at the nodes of ``grid`` (never V itself)."""

    grid: Grid2D
    values: np.ndarray
    epsilon_floor: Optional[Tuple[float, float]] = None
    int_V: Optional[float] = field(default=None, compare=False)

    def __post_init__(self):
        vals = _frozen(self.values).ravel()
        vals.setflags(write=False)
        if vals.size != self.grid.n ** 2:
            raise ConfigurationError(f"expected {self.grid.n ** 2} values, got {vals.size}")
        if not np.all(np.isfinite(vals)):
            raise ConfigurationError("sampled field contains non-finite values")
        if np.any(vals < 0):
            raise ConfigurationError("a SampledField stores V-, which is non-negative")
        object.__setattr__(self, "values", vals)

    @property
    def image(self) -> np.ndarray:
        return self.values.reshape(self.grid.n, self.grid.n)

    @property
    def mass(self) -> float:
        """Quadrature of the integral of V- over the box."""
        return math.fsum(self.values * self.grid.w)


def sample_negative_part(spec: PotentialSpec, grid: Grid2D) -> SampledField:
    """Sample ``max(-V, 0)`` at the nodes of ``grid``."""
    v = evaluate(spec, grid.nodes)
    return SampledField(grid, np.maximum(-v, 0.0), int_V=math.fsum(v * grid.w))


def epsilon_regularize(field: SampledField, eps: float, mu: float) -> SampledField:
    """Add the strictly positive floor ``eps * exp(-mu |x|)`` to every node."""
    if not eps > 0 or not mu > 0:
        raise ConfigurationError(f"epsilon regularization needs eps > 0 and mu > 0, got {eps}, {mu}")
    vals = field.values + eps * np.exp(-mu * field.grid.radii)
    return SampledField(field.grid, vals, (float(eps), float(mu)), int_V=field.int_V)


def sample(spec: PotentialSpec, n: int = 64, L: Optional[float] = None) -> SampledField:
    """Shortcut: negative part of ``spec`` on an ``n x n`` grid over the default box."""
    return sample_negative_part(spec, Grid2D(default_half_width(spec) if L is None else L, n))


def corpus() -> dict[str, PotentialSpec]:
    """The benchmark potentials used by the verification suite."""
    return {
        "gaussian_deep": make_family("gaussian_wells", {"wells": [{"depth": 5.0, "width": 1.0}]}),
        "gaussian_shallow": make_family("gaussian_wells", {"wells": [{"depth": 1.0, "width": 1.0}]}),
        "double_well": make_family("gaussian_wells", {"wells": [
            {"depth": 4.0, "width": 0.8, "center": [-1.2, 0.0]},
            {"depth": 2.5, "width": 1.0, "center": [1.3, 0.4]},
        ]}),
        "circular_well": make_family("circular_well", {"depth": 2.0, "radius": 1.5}),
        "ring_well": make_family("sum_of_terms", {"terms": [
            {"family": "circular_well", "params": {"depth": 3.0, "radius": 2.0}},
            {"family": "circular_well", "params": {"depth": -3.0, "radius": 1.0}},
        ]}),
        "well_and_bump": make_family("gaussian_wells", {"wells": [
            {"depth": 4.0, "width": 1.0, "center": [0.0, 0.0]},
            {"depth": -2.0, "width": 0.5, "center": [1.0, 0.0]},
        ]}),
    }
