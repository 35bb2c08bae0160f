"""Input checks shared by the estimators and the command line."""
from __future__ import annotations

import math
from typing import Union

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import ConfigurationError
from .potential import PotentialSpec, SampledField


def check_couplings(g) -> np.ndarray:
    """1-D float array of strictly positive, finite couplings (scalars allowed)."""
    arr = check_array(np.atleast_1d(np.asarray(g, dtype=float)), ensure_2d=False,
                      ensure_all_finite=True, input_name="g")
    if arr.ndim != 1:
        raise ConfigurationError("couplings must be a scalar or a 1-D sequence")
    if np.any(arr <= 0):
        raise ConfigurationError("couplings must be > 0")
    return arr


def check_positive(name: str, value, *, integer: bool = False, minimum=None):
    if isinstance(value, bool):
        raise ConfigurationError(f"{name} must be a number, got {value!r}")
    try:
        val = int(value) if integer else float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{name} must be a number, got {value!r}") from None
    if integer and val != value:
        raise ConfigurationError(f"{name} must be an integer, got {value!r}")
    if not (math.isfinite(val) and val > 0):
        raise ConfigurationError(f"{name} must be positive and finite, got {value!r}")
    if minimum is not None and val < minimum:
        raise ConfigurationError(f"{name} must be >= {minimum}, got {value!r}")
    return val


def check_potential(X) -> Union[PotentialSpec, SampledField]:
    if isinstance(X, (PotentialSpec, SampledField)):
        return X
    if isinstance(X, dict):
        return PotentialSpec.from_dict(X)
    raise ConfigurationError(f"expected a PotentialSpec, its dict form or a SampledField, got {type(X).__name__}")


def check_square_images(X) -> tuple[np.ndarray, int]:
    """Rows of non-negative flattened n x n images; returns the array and n."""
    arr = check_array(X, dtype=np.float64, ensure_all_finite=True)
    n = math.isqrt(arr.shape[1])
    if n * n != arr.shape[1]:
        raise ConfigurationError(f"row length {arr.shape[1]} is not a square number")
    if np.any(arr < 0):
        raise ConfigurationError("images must be non-negative")
    return arr, n
