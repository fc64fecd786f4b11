"""Reproducible test signals and the error metrics used to evaluate runs.

All generators draw from a counter-based Philox 64-bit PRNG seeded by the
caller, so identical seeds give bit-identical signals across runs and
platforms.  Bandlimited signals are synthesized from independent
standard-normal coefficients on the real in-band basis (equivalently:
Hermitian-symmetrized standard-normal DFT coefficients) drawn in canonical
ascending-bin order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, SynthesisError, UndefinedMetricError
from .grid import GridShape, Signal, SpectralSupport
from .operators import _project_values, _require_bandlimited
from .spectral import BandlimitedBasis

#: Out-of-band-to-total energy ratio below which a signal is treated as
#: exactly bandlimited (FFT roundoff sits around 1e-32).
_EXACT_BAND_RATIO = 1e-28


@dataclass(frozen=True)
class SynthesisSpec:
    """Recipe for a reproducible random bandlimited signal."""

    shape: GridShape
    support: SpectralSupport
    seed: int
    rms: float

    def __post_init__(self):
        if self.support.shape != self.shape:
            raise ParameterError(
                f"support dims {self.support.shape.dims} do not match {self.shape.dims}"
            )
        seed = int(self.seed)
        if seed < 0:
            raise ParameterError(f"seed must be a nonnegative integer, got {seed}")
        rms = float(self.rms)
        if not math.isfinite(rms) or rms <= 0.0:
            raise ParameterError(f"rms must be finite and > 0, got {rms!r}")
        object.__setattr__(self, "seed", seed)
        object.__setattr__(self, "rms", rms)


def random_bandlimited(spec: SynthesisSpec) -> Signal:
    """Random signal exactly supported on the spectral mask.

    Draws one standard normal per in-band basis coefficient from
    ``Philox(seed)`` and rescales the synthesized field to the target RMS
    amplitude.  Identical specs produce bit-identical signals.
    """
    basis = BandlimitedBasis(spec.support)
    rng = np.random.Generator(np.random.Philox(spec.seed))
    coeffs = rng.standard_normal(basis.dim)
    values = basis.synthesize(coeffs)
    norm = np.linalg.norm(values)
    if norm == 0.0:
        raise SynthesisError("drawn coefficients synthesized an all-zero signal")
    values = values * (spec.rms * math.sqrt(spec.shape.size) / norm)
    return Signal(spec.shape, values)


def _periodic_gaussian(dims, centers, sigmas, amplitudes) -> np.ndarray:
    field = np.zeros(dims)
    grids = np.indices(dims).astype(np.float64)
    for center, sigma, amp in zip(centers, sigmas, amplitudes):
        sq = np.zeros(dims)
        for axis, d in enumerate(dims):
            delta = (grids[axis] - center[axis] + d / 2.0) % d - d / 2.0
            sq += (delta / sigma[axis]) ** 2
        field += amp * np.exp(-0.5 * sq)
    return field


def add_out_of_band_noise(
    h: Signal,
    support: SpectralSupport,
    target_snr_db: float,
    seed: int,
    *,
    bumps: int = 8,
    width_range: tuple[float, float] = (0.03, 0.12),
    mode: str = "bumps",
) -> Signal:
    """Make a bandlimited signal approximately bandlimited at a target SNR.

    Superimposes seeded random-center, random-width spatial Gaussian bumps
    (``mode="bumps"``, the default) or white out-of-band spectral noise
    (``mode="spectral"``), then scales only the perturbation's out-of-band
    spectral component so that the result's in-band/out-of-band energy ratio
    equals ``target_snr_db``.  Any in-band leakage of the bumps is retained
    unscaled, so the in-band content is ``h`` plus that leakage.

    Bump widths are drawn uniformly from ``width_range`` as a fraction of
    each axis length; bump amplitudes are standard normal.
    """
    if h.shape != support.shape:
        raise ParameterError(
            f"signal dims {h.shape.dims} do not match support dims {support.shape.dims}"
        )
    if not math.isfinite(float(target_snr_db)):
        raise ParameterError(f"target_snr_db must be finite, got {target_snr_db!r}")
    if bumps < 1:
        raise ParameterError(f"bumps must be >= 1, got {bumps}")
    w_lo, w_hi = (float(w) for w in width_range)
    if not (0.0 < w_lo <= w_hi):
        raise ParameterError(f"width_range must satisfy 0 < lo <= hi, got {width_range}")
    if mode not in ("bumps", "spectral"):
        raise ParameterError(f"mode must be 'bumps' or 'spectral', got {mode!r}")
    _require_bandlimited(h.values, support.mask, "add_out_of_band_noise")

    dims = h.shape.dims
    rng = np.random.Generator(np.random.Philox(int(seed)))
    if mode == "bumps":
        centers = [rng.uniform(0.0, d, size=bumps) for d in dims]
        widths = [rng.uniform(w_lo, w_hi, size=bumps) * d for d in dims]
        amplitudes = rng.standard_normal(bumps)
        noise = _periodic_gaussian(
            dims,
            centers=list(zip(*centers)),
            sigmas=list(zip(*widths)),
            amplitudes=amplitudes,
        )
    else:
        noise = rng.standard_normal(dims)
    noise_in = _project_values(noise, support.mask)
    noise_out = noise - noise_in
    if mode == "spectral":
        noise_in = np.zeros(dims)
    out_norm = np.linalg.norm(noise_out)
    if out_norm <= 1e-12 * max(np.linalg.norm(noise), 1e-300):
        raise SynthesisError(
            "perturbation has no out-of-band energy (degenerate bump widths)"
        )
    inband = h.values + noise_in
    scale = np.linalg.norm(inband) / (out_norm * 10.0 ** (float(target_snr_db) / 20.0))
    return Signal(h.shape, inband + scale * noise_out)


def snr_in_out(f: Signal, support: SpectralSupport) -> float:
    """In-band to out-of-band energy ratio in dB, via DFT-domain energies.

    Raises :class:`~bandex.errors.UndefinedMetricError` when the out-of-band
    energy is zero at working precision (the signal is exactly bandlimited).
    """
    if f.shape != support.shape:
        raise ParameterError(
            f"signal dims {f.shape.dims} do not match support dims {support.shape.dims}"
        )
    power = np.abs(np.fft.fftn(f.values)) ** 2
    e_in = float(power[support.mask].sum())
    e_out = float(power[~support.mask].sum())
    total = e_in + e_out
    if total == 0.0 or e_out <= _EXACT_BAND_RATIO * total:
        raise UndefinedMetricError(
            "out-of-band energy is zero: the signal is exactly bandlimited"
        )
    if e_in == 0.0:
        return float("-inf")
    return 10.0 * math.log10(e_in / e_out)


def nmse(truth: Signal, estimate: Signal) -> float:
    """Normalized mean square error in dB:
    ``10*log10(||truth - estimate||^2 / ||truth||^2)``.

    Returns ``-inf`` when the estimate equals the truth exactly; raises when
    the truth has zero norm (the ratio is undefined).
    """
    if truth.shape != estimate.shape:
        raise ParameterError(
            f"shape mismatch: {truth.shape.dims} vs {estimate.shape.dims}"
        )
    ref = truth.norm()
    if ref == 0.0:
        raise UndefinedMetricError("NMSE is undefined for a zero reference signal")
    err = float(np.linalg.norm(truth.values - estimate.values))
    if err == 0.0:
        return float("-inf")
    return 20.0 * math.log10(err / ref)
