"""Linear operators of the extrapolation scheme.

Two orthogonal projections do all the work: bandlimiting (zeroing DFT bins
outside a spectral support) and region truncation (pointwise multiplication
with a spatial mask).  From these the module builds

* the weighted update step
  ``f -> sum_m w_m * P(f + chi_m * (h - f))``,
* its damped variant
  ``f -> sum_m w_m * P((1 - mu*tau) * f + tau * chi_m * (h - f))``, and
* the composition ``Q = P o chi o P`` whose eigenpairs (computed in
  :mod:`bandex.spectral`) govern the step's contraction behaviour.

All operations are pure functions of their inputs and deterministic: the
per-region terms are accumulated left-to-right in ascending region order so
repeated calls are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ContractViolationError,
    InternalConsistencyError,
    ParameterError,
)
from .grid import GridShape, MeasuredSignal, Region, Signal, SpectralSupport

#: Relative imaginary residual tolerated after the inverse DFT.  Anything
#: larger signals a non-Hermitian mask rather than roundoff.
IMAG_RESIDUAL_RTOL = 1e-10

#: Relative tolerance of the bandlimited-input precondition on steps.
BANDLIMIT_RTOL = 1e-8


@dataclass(frozen=True)
class RegularizationParams:
    """Damping weight ``mu`` and step size ``tau`` of the regularized step.

    The type itself only requires ``mu >= 0`` and ``tau > 0``.  The damped
    step additionally demands the contraction regime ``mu > 0`` and
    ``tau < 2 / (1 + 2*mu)`` (an open bound), under which it is a Banach
    contraction with rate ``1 - mu*tau``.
    """

    mu: float
    tau: float

    def __post_init__(self):
        mu = float(self.mu)
        tau = float(self.tau)
        if not np.isfinite(mu) or mu < 0.0:
            raise ParameterError(f"mu must be finite and >= 0, got {mu!r}")
        if not np.isfinite(tau) or tau <= 0.0:
            raise ParameterError(f"tau must be finite and > 0, got {tau!r}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "tau", tau)

    @property
    def is_contractive(self) -> bool:
        """True iff mu > 0 and tau < 2/(1 + 2*mu)."""
        return self.mu > 0.0 and self.tau < 2.0 / (1.0 + 2.0 * self.mu)

    @property
    def contraction_rate(self) -> float:
        """Lipschitz constant ``1 - mu*tau`` of the damped step."""
        return 1.0 - self.mu * self.tau


def _require_contractive(params: RegularizationParams) -> None:
    if not params.is_contractive:
        raise ParameterError(
            "regularized step requires mu > 0 and tau < 2/(1 + 2*mu) "
            f"(open bound); got mu={params.mu!r}, tau={params.tau!r}"
        )


def _check_shape(shape: GridShape, other: GridShape, what: str) -> None:
    if shape != other:
        raise ParameterError(f"{what}: dims {other.dims} do not match {shape.dims}")


def _project_values(values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Zero all DFT bins outside ``mask`` and return the real result."""
    spectrum = np.fft.fftn(values)
    spectrum *= mask
    out = np.fft.ifftn(spectrum)
    imag_norm = np.linalg.norm(out.imag)
    if imag_norm > IMAG_RESIDUAL_RTOL * np.linalg.norm(out):
        raise InternalConsistencyError(
            "inverse DFT left a large imaginary residual "
            f"({imag_norm!r}); the support mask is not Hermitian-symmetric"
        )
    return np.ascontiguousarray(out.real)


def _require_bandlimited(values: np.ndarray, mask: np.ndarray, what: str) -> None:
    residual = np.linalg.norm(_project_values(values, mask) - values)
    if residual > BANDLIMIT_RTOL * np.linalg.norm(values):
        raise ContractViolationError(
            f"{what}: input is not bandlimited to the support "
            f"(projection residual {residual!r} exceeds {BANDLIMIT_RTOL} * norm)"
        )


def bandlimit_project(f: Signal, support: SpectralSupport) -> Signal:
    """Orthogonal projection onto the signals supported on the spectral mask.

    Computes the forward DFT, zeroes every bin outside the support, inverse
    transforms and discards the (roundoff-level) imaginary part.  Idempotent
    and self-adjoint; the output is real because the mask is
    Hermitian-symmetric.
    """
    _check_shape(f.shape, support.shape, "bandlimit_project")
    return Signal(f.shape, _project_values(f.values, support.mask))


def region_truncate(f: Signal, region: Region) -> Signal:
    """Pointwise truncation: keep values inside the region, zero outside."""
    _check_shape(f.shape, region.shape, "region_truncate")
    return Signal(f.shape, np.where(region.mask, f.values, 0.0))


def composite_apply(f: Signal, region: Region, support: SpectralSupport) -> Signal:
    """Apply ``Q = bandlimit o truncate o bandlimit`` to a signal.

    Q is linear, self-adjoint and positive semidefinite with spectrum in
    [0, 1]; its eigenvalues measure how much of a unit-norm bandlimited
    signal's energy can sit inside the region.
    """
    _check_shape(f.shape, region.shape, "composite_apply")
    _check_shape(f.shape, support.shape, "composite_apply")
    return Signal(f.shape, _composite_values(f.values, region.mask, support.mask))


def _composite_values(values: np.ndarray, rmask: np.ndarray, smask: np.ndarray) -> np.ndarray:
    inband = _project_values(values, smask)
    return _project_values(np.where(rmask, inband, 0.0), smask)


def initial_estimate(meas: MeasuredSignal, support: SpectralSupport) -> Signal:
    """Bandlimited truncated equivalent of the source signal.

    Returns the unweighted sum over regions of the bandlimited projection of
    each masked measurement.  The result is bandlimited by construction and
    is the iteration's starting point.
    """
    _check_shape(meas.shape, support.shape, "initial_estimate")
    return Signal(meas.shape, _initial_estimate_values(meas, support.mask))


def _initial_estimate_values(meas: MeasuredSignal, smask: np.ndarray) -> np.ndarray:
    acc = np.zeros(meas.shape.dims)
    for region in meas.regions.regions:
        acc = acc + _project_values(np.where(region.mask, meas.samples, 0.0), smask)
    return acc


def papoulis_step(f: Signal, meas: MeasuredSignal, support: SpectralSupport) -> Signal:
    """One weighted extrapolation step.

    For a bandlimited input ``f`` returns
    ``sum_m w_m * P(f + chi_m * (h - f))``: each region's known values are
    blended into the current estimate, the result is re-bandlimited, and the
    per-region corrections are convexly combined.  The measured truth is a
    fixed point, and the step is firmly nonexpansive on the bandlimited
    subspace.

    Raises :class:`~bandex.errors.ContractViolationError` when ``f`` is not
    bandlimited within a relative tolerance of ``1e-8``.
    """
    _check_shape(f.shape, meas.shape, "papoulis_step")
    _check_shape(f.shape, support.shape, "papoulis_step")
    return Signal(f.shape, _papoulis_step_values(f.values, meas, support.mask))


def _papoulis_step_values(values: np.ndarray, meas: MeasuredSignal, smask: np.ndarray) -> np.ndarray:
    _require_bandlimited(values, smask, "papoulis_step")
    h = meas.samples
    acc = np.zeros(values.shape)
    for region, w in zip(meas.regions.regions, meas.regions.weights):
        update = values + region.mask * (h - values)
        acc = acc + w * _project_values(update, smask)
    return acc


def regularized_step(
    f: Signal,
    meas: MeasuredSignal,
    support: SpectralSupport,
    params: RegularizationParams,
) -> Signal:
    """One damped extrapolation step.

    Returns ``sum_m w_m * P((1 - mu*tau) * f + tau * chi_m * (h - f))``.
    With ``mu > 0`` and ``tau < 2/(1 + 2*mu)`` this is a Banach contraction
    with rate ``1 - mu*tau``; its fixed point minimizes the Tikhonov
    functional ``sum_m w_m * ||chi_m f - h||^2 + mu * ||f||^2`` over the
    bandlimited subspace.
    """
    _check_shape(f.shape, meas.shape, "regularized_step")
    _check_shape(f.shape, support.shape, "regularized_step")
    _require_contractive(params)
    return Signal(f.shape, _regularized_step_values(f.values, meas, support.mask, params))


def _regularized_step_values(
    values: np.ndarray,
    meas: MeasuredSignal,
    smask: np.ndarray,
    params: RegularizationParams,
) -> np.ndarray:
    _require_bandlimited(values, smask, "regularized_step")
    h = meas.samples
    damped = (1.0 - params.mu * params.tau) * values
    acc = np.zeros(values.shape)
    for region, w in zip(meas.regions.regions, meas.regions.weights):
        update = damped + params.tau * (region.mask * (h - values))
        acc = acc + w * _project_values(update, smask)
    return acc
