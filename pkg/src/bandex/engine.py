"""Iteration driver with convergence metrics, plus direct-solve oracles.

:func:`run_extrapolation` starts from the bandlimited truncated equivalent
of the measurements and repeats the selected step, recording NMSE (when the
ground truth is supplied), the relative successive-iterate residual and the
per-step contraction ratio.  Runs are deterministic given their inputs.

The oracles solve the same recovery problems non-iteratively, over in-band
basis coefficients (dimension = support bin count), by assembling and
solving the weighted normal equations.  They exist to certify the iterative
results: the unregularized fixed point must match the weighted least-squares
solution, the damped fixed point the Tikhonov minimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, ParameterError
from .grid import MeasuredSignal, Signal, SpectralSupport
from .operators import (
    RegularizationParams,
    _initial_estimate_values,
    _papoulis_step_values,
    _regularized_step_values,
    _require_contractive,
)
from .spectral import BandlimitedBasis

#: NMSE (dB) above which a run with known truth is declared divergent.
DIVERGENCE_NMSE_DB = 100.0

#: Largest in-band subspace dimension the dense oracles will solve.
DENSE_SOLVE_BUDGET = 4096

#: Condition number above which a least-squares recovery is flagged ill-posed.
ILL_POSED_CONDITION = 1e12

_RESIDUAL_FLOOR = 1e-300


@dataclass(frozen=True)
class RunConfig:
    """Loop controls for one extrapolation run.

    ``mode`` selects the step: ``"unregularized"`` (plain weighted step) or
    ``"regularized"`` (damped step, which requires ``params``); the
    unregularized mode forbids them.
    """

    mode: str
    params: RegularizationParams | None = None
    max_iters: int = 1000
    residual_tol: float = 0.0
    record_every: int = 1

    def __post_init__(self):
        if self.mode not in ("unregularized", "regularized"):
            raise ParameterError(
                f"mode must be 'unregularized' or 'regularized', got {self.mode!r}"
            )
        if self.mode == "regularized":
            if self.params is None:
                raise ParameterError("regularized mode requires RegularizationParams")
            _require_contractive(self.params)
        elif self.params is not None:
            raise ParameterError("unregularized mode forbids RegularizationParams")
        if int(self.max_iters) < 1:
            raise ParameterError(f"max_iters must be >= 1, got {self.max_iters}")
        if not (float(self.residual_tol) >= 0.0):
            raise ParameterError(f"residual_tol must be >= 0, got {self.residual_tol!r}")
        if int(self.record_every) < 1:
            raise ParameterError(f"record_every must be >= 1, got {self.record_every}")
        object.__setattr__(self, "max_iters", int(self.max_iters))
        object.__setattr__(self, "residual_tol", float(self.residual_tol))
        object.__setattr__(self, "record_every", int(self.record_every))


@dataclass(frozen=True)
class IterationRecord:
    """One recorded iteration: NMSE (dB, None without truth), relative
    successive-iterate residual and contraction ratio (None at the first
    step, where no previous increment exists)."""

    iteration: int
    nmse_db: float | None
    residual: float
    contraction: float | None


@dataclass(frozen=True, eq=False)
class IterationReport:
    """Metrics trace of a run plus the final iterate and the stop reason
    (``max_iters``, ``residual_tol`` or ``diverged``)."""

    records: tuple[IterationRecord, ...]
    final: Signal
    stop_reason: str

    def __post_init__(self):
        iters = [r.iteration for r in self.records]
        if any(b <= a for a, b in zip(iters, iters[1:])):
            raise ParameterError("record iteration indices must be strictly increasing")
        if any(r.residual < 0.0 for r in self.records):
            raise ParameterError("residuals must be nonnegative")

    @property
    def final_nmse_db(self) -> float | None:
        for record in reversed(self.records):
            if record.nmse_db is not None:
                return record.nmse_db
        return None


def _nmse_db(truth_values: np.ndarray, truth_norm: float, values: np.ndarray) -> float:
    err = float(np.linalg.norm(truth_values - values))
    if err == 0.0:
        return float("-inf")
    return 20.0 * math.log10(err / truth_norm)


def run_extrapolation(
    meas: MeasuredSignal,
    support: SpectralSupport,
    config: RunConfig,
    truth: Signal | None = None,
) -> IterationReport:
    """Iterate the selected step from the bandlimited initial estimate.

    Stops when the relative successive-iterate residual drops to
    ``config.residual_tol`` or after ``config.max_iters`` steps.  Metrics are
    recorded every ``config.record_every`` iterations and always at the final
    one; NMSE against ``truth`` is tracked when provided.

    Raises :class:`~bandex.errors.DivergenceError` -- carrying the report of
    everything recorded so far -- when an iterate turns non-finite or, with
    known truth, the NMSE exceeds ``+100`` dB.
    """
    shape = meas.shape
    if support.shape != shape:
        raise ParameterError(
            f"support dims {support.shape.dims} do not match measurement dims {shape.dims}"
        )
    if truth is not None and truth.shape != shape:
        raise ParameterError(
            f"truth dims {truth.shape.dims} do not match measurement dims {shape.dims}"
        )
    smask = support.mask
    if config.mode == "regularized":
        def step(values):
            return _regularized_step_values(values, meas, smask, config.params)
    else:
        def step(values):
            return _papoulis_step_values(values, meas, smask)

    truth_values = truth.values if truth is not None else None
    truth_norm = truth.norm() if truth is not None else 0.0
    if truth is not None and truth_norm == 0.0:
        raise ParameterError("truth signal must have nonzero norm for NMSE tracking")

    records: list[IterationRecord] = []
    current = _initial_estimate_values(meas, smask)
    previous_delta: float | None = None

    for k in range(1, config.max_iters + 1):
        candidate = step(current)
        if not np.isfinite(candidate).all():
            raise DivergenceError(
                f"iterate {k} contains non-finite values",
                report=IterationReport(tuple(records), Signal(shape, current), "diverged"),
            )
        delta = float(np.linalg.norm(candidate - current))
        residual = delta / max(float(np.linalg.norm(current)), _RESIDUAL_FLOOR)
        contraction = None
        if previous_delta is not None and previous_delta > 0.0:
            contraction = delta / previous_delta
        nm = None
        if truth_values is not None:
            nm = _nmse_db(truth_values, truth_norm, candidate)

        stop_reason = None
        if residual <= config.residual_tol:
            stop_reason = "residual_tol"
        elif k == config.max_iters:
            stop_reason = "max_iters"

        if nm is not None and nm > DIVERGENCE_NMSE_DB:
            records.append(IterationRecord(k, nm, residual, contraction))
            raise DivergenceError(
                f"NMSE reached {nm:.2f} dB at iteration {k}, above the "
                f"+{DIVERGENCE_NMSE_DB:.0f} dB divergence threshold",
                report=IterationReport(tuple(records), Signal(shape, candidate), "diverged"),
            )
        if k % config.record_every == 0 or stop_reason is not None:
            records.append(IterationRecord(k, nm, residual, contraction))
        if stop_reason is not None:
            return IterationReport(tuple(records), Signal(shape, candidate), stop_reason)
        previous_delta = delta
        current = candidate

    raise AssertionError("unreachable: loop always stops at max_iters")


@dataclass(frozen=True, eq=False)
class OracleSolution:
    """Direct-solve result with the normal-equation condition number.

    ``ill_posed`` is set when the condition number exceeds
    :data:`ILL_POSED_CONDITION`, i.e. the discrete recovery is (numerically)
    non-unique; the attached signal is then the minimum-norm solution.
    """

    signal: Signal
    condition_number: float
    ill_posed: bool


def _normal_system(meas: MeasuredSignal, support: SpectralSupport):
    if support.shape != meas.shape:
        raise ParameterError(
            f"support dims {support.shape.dims} do not match measurement dims {meas.shape.dims}"
        )
    basis = BandlimitedBasis(support)
    if basis.dim > DENSE_SOLVE_BUDGET:
        raise ParameterError(
            f"bandlimited subspace dimension {basis.dim} exceeds the dense solve "
            f"budget of {DENSE_SOLVE_BUDGET}"
        )
    matrix = basis.dense_matrix()
    h_flat = meas.samples.reshape(-1)
    normal = np.zeros((basis.dim, basis.dim))
    rhs = np.zeros(basis.dim)
    for region, w in zip(meas.regions.regions, meas.regions.weights):
        rows = matrix[region.mask.reshape(-1)]
        normal += w * (rows.T @ rows)
        rhs += w * (rows.T @ h_flat[region.mask.reshape(-1)])
    return basis, matrix, normal, rhs


def least_squares_oracle(meas: MeasuredSignal, support: SpectralSupport) -> OracleSolution:
    """Weighted least-squares recovery over in-band coefficients.

    Minimizes ``sum_m w_m * ||chi_m f - h||^2`` over bandlimited ``f`` by
    solving the weighted normal equations directly.  Independent of the
    iterative path (trigonometric basis assembly, LAPACK solve, no FFT), so
    it certifies the unregularized fixed point.
    """
    _basis, matrix, normal, rhs = _normal_system(meas, support)
    with np.errstate(divide="ignore", over="ignore"):
        condition = float(np.linalg.cond(normal))
    ill_posed = not np.isfinite(condition) or condition > ILL_POSED_CONDITION
    if ill_posed:
        coeffs, *_ = np.linalg.lstsq(normal, rhs, rcond=None)
    else:
        coeffs = np.linalg.solve(normal, rhs)
    return OracleSolution(
        signal=Signal(support.shape, matrix @ coeffs),
        condition_number=condition,
        ill_posed=ill_posed,
    )


def tikhonov_oracle(meas: MeasuredSignal, support: SpectralSupport, mu: float) -> Signal:
    """Direct minimizer of the Tikhonov functional
    ``sum_m w_m * ||chi_m f - h||^2 + mu * ||f||^2`` over bandlimited ``f``.

    Well-posed for every ``mu > 0``; this is the fixed point the damped
    iteration converges to.
    """
    mu = float(mu)
    if not (mu > 0.0) or not math.isfinite(mu):
        raise ParameterError(f"mu must be finite and > 0, got {mu!r}")
    basis, matrix, normal, rhs = _normal_system(meas, support)
    coeffs = np.linalg.solve(normal + mu * np.eye(basis.dim), rhs)
    return Signal(support.shape, matrix @ coeffs)
