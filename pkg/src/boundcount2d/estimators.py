"""Estimator-style wrappers: fit on a potential, predict as a function of coupling."""
from __future__ import annotations

import math
from typing import Optional, Union

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_couplings, check_positive, check_potential, check_square_images
from .bound import assemble_bounds, compute_bound
from .exceptions import ConfigurationError
from .oracle import converged_count
from .potential import PotentialSpec, default_half_width


class BirmanSchwingerBound(BaseEstimator):
    """Upper bound on the bound-state count of -Laplacian + g V.

    ``fit`` discretizes the kernel once at g = 1; ``predict(g)`` rescales the
    trace terms, which costs nothing per coupling.  The coupling stored in a
    PotentialSpec is ignored; ``g`` is always the total coupling.
    """

    def __init__(self, n: int = 64, L: Optional[float] = None, k0: float = 1.0,
                 eps: Union[str, float, None] = "auto", mu: Optional[float] = None,
                 method: str = "auto"):
        self.n = n
        self.L = L
        self.k0 = k0
        self.eps = eps
        self.mu = mu
        self.method = method

    def fit(self, X, y=None):
        pot = check_potential(X)
        n = check_positive("n", self.n, integer=True, minimum=8)
        if self.L is not None:
            check_positive("L", self.L)
        check_positive("k0", self.k0)
        if self.method not in ("auto", "dense", "fft"):
            raise ConfigurationError(f"unknown method {self.method!r}")
        if isinstance(pot, PotentialSpec) and pot.g != 1.0:
            pot = pot.with_coupling(1.0)
        rep = compute_bound(pot, n=n, L=self.L, k0=self.k0, eps=self.eps, mu=self.mu,
                            g=1.0, method=self.method)
        self.report_ = rep
        self.terms_ = (rep.T1, rep.T2, rep.T3)
        return self

    def report(self, g: float = 1.0):
        check_is_fitted(self, "terms_")
        g = float(check_couplings(g)[0])
        meta = {k: getattr(self.report_, k) for k in ("k0", "n", "L", "eps", "mu", "int_V", "int_Vminus")}
        return assemble_bounds(self.terms_, g, **meta)

    def predict(self, g) -> np.ndarray:
        """N_total bound at each coupling."""
        check_is_fitted(self, "terms_")
        t1, t2, t3 = self.terms_
        g = check_couplings(g)
        return 1.0 + g * g * (t1 - 2.0 * t2) + (g * t3) ** 2

    def predict_N_I(self, g) -> np.ndarray:
        check_is_fitted(self, "terms_")
        t1, t2, _ = self.terms_
        g = check_couplings(g)
        return g * g * (t1 - t2)


class FiniteDifferenceCounter(BaseEstimator):
    """Reference count of negative eigenvalues in a Dirichlet box, refined until stable.

    As for the bound, the coupling stored in the PotentialSpec is replaced by ``g``.
    """

    def __init__(self, L_box: Optional[float] = None, n_box: int = 96, levels: int = 3):
        self.L_box = L_box
        self.n_box = n_box
        self.levels = levels

    def fit(self, X, y=None):
        spec = check_potential(X)
        if not isinstance(spec, PotentialSpec):
            raise ConfigurationError("the finite-difference counter needs an analytic potential")
        check_positive("n_box", self.n_box, integer=True, minimum=32)
        check_positive("levels", self.levels, integer=True)
        self.spec_ = spec.with_coupling(1.0)
        # the box must hold the well and a margin for the tails of weak states
        self.L_box_ = float(self.L_box) if self.L_box is not None else 2.0 * default_half_width(spec)
        check_positive("L_box", self.L_box_)
        return self

    def count(self, g: float):
        check_is_fitted(self, "spec_")
        g = float(check_couplings(g)[0])
        return converged_count(self.spec_, self.L_box_, int(self.n_box), g, levels=int(self.levels))

    def predict(self, g) -> np.ndarray:
        return np.array([self.count(x).count for x in check_couplings(g)], dtype=int)


class CircularRearrangement(TransformerMixin, BaseEstimator):
    """Circular decreasing rearrangement of flattened square images.

    Each row is an n x n image (row-major, x index first); the k-th largest
    value is moved to the k-th closest cell centre from the image centre.
    """

    def fit(self, X, y=None):
        _, n = check_square_images(X)
        self.n_features_in_ = n * n
        axis = np.arange(n) - (n - 1) / 2.0
        r = np.hypot(axis[:, None], axis[None, :]).ravel()
        self.order_ = np.argsort(r, kind="stable")
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "order_")
        arr, n = check_square_images(X)
        if n * n != self.n_features_in_:
            raise ConfigurationError(f"expected {self.n_features_in_} features, got {n * n}")
        out = np.empty_like(arr)
        ranked = -np.sort(-arr, axis=1, kind="stable")
        out[:, self.order_] = ranked
        return out
