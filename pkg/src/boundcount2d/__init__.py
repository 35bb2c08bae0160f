"""Upper bounds on the number of 2D bound states for non-central potentials."""

__version__ = "0.1.0"

from .exceptions import ConfigurationError, DomainError, EmptyActiveSetError
from .potential import (
    Grid2D,
    PotentialSpec,
    SampledField,
    epsilon_regularize,
    evaluate,
    make_family,
    sample_negative_part,
)
from .bskernel import build_K, build_Kprime, build_a
from .bound import BoundReport, assemble_bounds, bound_terms, compute_bound
from .estimators import BirmanSchwingerBound, CircularRearrangement, FiniteDifferenceCounter

__all__ = [
    "BirmanSchwingerBound",
    "BoundReport",
    "CircularRearrangement",
    "ConfigurationError",
    "DomainError",
    "EmptyActiveSetError",
    "FiniteDifferenceCounter",
    "Grid2D",
    "PotentialSpec",
    "SampledField",
    "assemble_bounds",
    "bound_terms",
    "build_K",
    "build_Kprime",
    "build_a",
    "compute_bound",
    "epsilon_regularize",
    "evaluate",
    "make_family",
    "sample_negative_part",
]
