"""Scikit-learn compatible front end for the extrapolation engine."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .engine import RunConfig, run_extrapolation
from .errors import ParameterError
from .grid import (
    GridShape,
    MeasuredSignal,
    Signal,
    make_spectral_support,
    region_from_rect,
    validate_weighted_regions,
)
from .operators import RegularizationParams


def check_signal_matrix(X, n_features: int) -> np.ndarray:
    """Validate a (n_samples, n_features) matrix of flattened grid signals."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise ParameterError(f"expected a 2-D sample matrix, got ndim={X.ndim}")
    if X.shape[1] != n_features:
        raise ParameterError(
            f"each row must hold {n_features} grid samples, got {X.shape[1]}"
        )
    if not np.isfinite(X).all():
        raise ParameterError("input contains non-finite values")
    return X


class PapoulisExtrapolator(BaseEstimator, TransformerMixin):
    """Extrapolate masked grid signals to bandlimited full-grid signals.

    Each row of ``X`` is a row-major flattened signal on the configured grid;
    only the values inside the measurement regions are used (everything else
    is treated as unobserved).  ``transform`` runs the weighted extrapolation
    iteration per row and returns the flattened reconstructions, so the
    estimator composes with standard pipelines.

    Parameters
    ----------
    dims : tuple of int
        Grid sample counts per axis.
    half_bandwidth : tuple of int
        Per-axis half-bandwidth of the rectangular lowpass spectral support.
    regions : list of (corner, extent) pairs
        Axis-aligned measurement rectangles.
    weights : "uniform" or sequence of float, default "uniform"
        Convex region weights (must sum to 1 when given explicitly).
    mode : {"unregularized", "regularized"}, default "unregularized"
        Plain weighted iteration or its damped (Tikhonov) variant.
    mu, tau : float, optional
        Damping parameters, required in regularized mode
        (``mu > 0``, ``0 < tau < 2/(1 + 2*mu)``).
    max_iters : int, default 1000
        Iteration cap per sample.
    residual_tol : float, default 0.0
        Relative successive-iterate residual at which to stop early.
    """

    def __init__(
        self,
        dims=None,
        half_bandwidth=None,
        regions=None,
        weights="uniform",
        mode="unregularized",
        mu=None,
        tau=None,
        max_iters=1000,
        residual_tol=0.0,
    ):
        self.dims = dims
        self.half_bandwidth = half_bandwidth
        self.regions = regions
        self.weights = weights
        self.mode = mode
        self.mu = mu
        self.tau = tau
        self.max_iters = max_iters
        self.residual_tol = residual_tol

    def fit(self, X=None, y=None):
        """Validate parameters and build the grid-domain objects.

        The estimator is stateless with respect to the data; ``X`` is
        accepted (and shape-checked when given) for pipeline compatibility.
        """
        if self.dims is None or self.half_bandwidth is None or not self.regions:
            raise ParameterError(
                "dims, half_bandwidth and a non-empty regions list are required"
            )
        shape = GridShape(tuple(self.dims))
        support = make_spectral_support(shape, self.half_bandwidth)
        regions = [region_from_rect(shape, corner, extent) for corner, extent in self.regions]
        if isinstance(self.weights, str):
            if self.weights != "uniform":
                raise ParameterError(f"unknown weights mode {self.weights!r}")
            weights = [1.0 / len(regions)] * len(regions)
        else:
            weights = list(self.weights)
        region_set = validate_weighted_regions(regions, weights)
        params = None
        if self.mode == "regularized":
            if self.mu is None or self.tau is None:
                raise ParameterError("regularized mode requires mu and tau")
            params = RegularizationParams(mu=self.mu, tau=self.tau)
        elif self.mu is not None or self.tau is not None:
            raise ParameterError("mu and tau are only valid in regularized mode")
        run_config = RunConfig(
            mode=self.mode,
            params=params,
            max_iters=self.max_iters,
            residual_tol=self.residual_tol,
        )
        self.shape_ = shape
        self.support_ = support
        self.region_set_ = region_set
        self.run_config_ = run_config
        if X is not None:
            check_signal_matrix(X, shape.size)
        return self

    def transform(self, X):
        """Extrapolate each row from its values inside the regions."""
        if not hasattr(self, "run_config_"):
            raise NotFittedError(
                "This PapoulisExtrapolator instance is not fitted yet; call fit first."
            )
        X = check_signal_matrix(X, self.shape_.size)
        out = np.empty_like(X)
        for i, row in enumerate(X):
            signal = Signal(self.shape_, row)
            meas = MeasuredSignal.from_signal(self.region_set_, signal)
            report = run_extrapolation(meas, self.support_, self.run_config_)
            out[i] = report.final.values.reshape(-1)
        return out

    @property
    def measurement_mask_(self) -> np.ndarray:
        """Boolean union mask of the fitted measurement regions."""
        if not hasattr(self, "region_set_"):
            raise NotFittedError("fit the estimator before accessing the mask")
        return self.region_set_.union_mask
