"""Grid-domain data model: shapes, signals, spectral supports and regions.

Conventions used throughout the package:

* grids are periodic (toroidal) and sampled on a row-major (C-order) lattice;
* DFT bins follow numpy's unshifted layout, DC at index 0 on every axis;
* signals are real-valued float64 arrays;
* spectral supports are Hermitian-symmetric Boolean masks, so bandlimiting
  maps real signals to real signals.

All types are immutable after construction (backing arrays are marked
read-only) and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ParameterError, ValidationError

#: Tolerance on |sum(weights) - 1| accepted by :class:`WeightedRegionSet`.
#: Loose enough to admit 1/3-style weights in binary floating point.
WEIGHT_SUM_TOLERANCE = 1e-12


def _freeze(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def _index_tuple(values, ndim: int, what: str) -> tuple[int, ...]:
    try:
        out = tuple(int(v) for v in values)
    except (TypeError, ValueError) as exc:
        raise ParameterError(f"{what} must be a sequence of integers") from exc
    if len(out) != ndim:
        raise ParameterError(f"{what} must have {ndim} entries, got {len(out)}")
    return out


@dataclass(frozen=True)
class GridShape:
    """Sample counts per axis of an N-dimensional periodic grid."""

    dims: tuple[int, ...]

    def __post_init__(self):
        raw = tuple(self.dims)
        dims = _index_tuple(raw, len(raw), "dims")
        if not dims:
            raise ParameterError("grid must have at least one axis")
        if any(d < 1 for d in dims):
            raise ParameterError(f"every axis length must be >= 1, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return math.prod(self.dims)

    def ravel_index(self, index) -> int:
        """Row-major flat index of a multi-index."""
        return int(np.ravel_multi_index(_index_tuple(index, self.ndim, "index"), self.dims))

    def unravel_index(self, flat: int) -> tuple[int, ...]:
        """Multi-index of a row-major flat index."""
        return tuple(int(i) for i in np.unravel_index(int(flat), self.dims))


def _grid_array(values, shape: GridShape, dtype, what: str) -> np.ndarray:
    array = np.asarray(values, dtype=dtype)
    if array.size != shape.size:
        raise ParameterError(
            f"{what} has {array.size} elements, expected {shape.size} for dims {shape.dims}"
        )
    return array.reshape(shape.dims, order="C").copy(order="C")


@dataclass(frozen=True, eq=False)
class Signal:
    """Real-valued field sampled on a periodic grid.

    ``values`` is stored as a read-only float64 array of shape ``shape.dims``
    in row-major order; all entries must be finite.
    """

    shape: GridShape
    values: np.ndarray

    def __post_init__(self):
        values = _grid_array(self.values, self.shape, np.float64, "signal values")
        if not np.isfinite(values).all():
            raise ParameterError("signal values must be finite (no NaN/Inf)")
        object.__setattr__(self, "values", _freeze(values))

    def norm(self) -> float:
        """Euclidean norm of the sample values."""
        return float(np.linalg.norm(self.values))


def _hermitian_image(mask: np.ndarray) -> np.ndarray:
    """mask evaluated at the negated (mod dims) bin index."""
    out = mask
    for axis in range(mask.ndim):
        out = np.roll(np.flip(out, axis=axis), 1, axis=axis)
    return out


@dataclass(frozen=True, eq=False)
class SpectralSupport:
    """Boolean mask over DFT bins encoding the compact spectral support.

    The mask must be Hermitian-symmetric (``mask[k] == mask[-k mod dims]``)
    so that the associated bandlimiting projection maps real signals to real
    signals, and must select at least one bin.
    """

    shape: GridShape
    mask: np.ndarray

    def __post_init__(self):
        mask = _grid_array(self.mask, self.shape, bool, "support mask")
        if not mask.any():
            raise ValidationError("spectral support must select at least one bin")
        if not np.array_equal(mask, _hermitian_image(mask)):
            raise ValidationError(
                "spectral support mask is not Hermitian-symmetric "
                "(mask[k] must equal mask[-k mod dims])"
            )
        object.__setattr__(self, "mask", _freeze(mask))

    @property
    def bin_count(self) -> int:
        return int(self.mask.sum())


@dataclass(frozen=True, eq=False)
class Region:
    """Boolean mask selecting the spatial samples of one measurement region."""

    shape: GridShape
    mask: np.ndarray

    def __post_init__(self):
        mask = _grid_array(self.mask, self.shape, bool, "region mask")
        if not mask.any():
            raise ValidationError("region must contain at least one sample")
        object.__setattr__(self, "mask", _freeze(mask))

    @property
    def sample_count(self) -> int:
        return int(self.mask.sum())


@dataclass(frozen=True)
class WeightedRegionSet:
    """Ordered measurement regions with convex weights.

    Weights must lie in (0, 1] and sum to 1 within
    :data:`WEIGHT_SUM_TOLERANCE`; all regions must share one grid shape.
    Regions may overlap.
    """

    regions: tuple[Region, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        regions = tuple(self.regions)
        try:
            weights = tuple(float(w) for w in self.weights)
        except (TypeError, ValueError) as exc:
            raise ParameterError("weights must be a sequence of reals") from exc
        if not regions:
            raise ParameterError("at least one region is required")
        if len(regions) != len(weights):
            raise ParameterError(
                f"got {len(regions)} regions but {len(weights)} weights"
            )
        shape = regions[0].shape
        for m, region in enumerate(regions):
            if region.shape != shape:
                raise ValidationError(
                    f"region {m} has dims {region.shape.dims}, expected {shape.dims}"
                )
        for m, w in enumerate(weights):
            if not math.isfinite(w) or w <= 0.0 or w > 1.0:
                raise ValidationError(f"weight {m} is {w}, must lie in (0, 1]")
        total = math.fsum(weights)
        if abs(total - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise ValidationError(f"weights sum to {total!r}, must equal 1")
        object.__setattr__(self, "regions", regions)
        object.__setattr__(self, "weights", weights)

    @property
    def shape(self) -> GridShape:
        return self.regions[0].shape

    def __len__(self) -> int:
        return len(self.regions)

    @cached_property
    def union_mask(self) -> np.ndarray:
        """Boolean mask of the union of all regions."""
        union = np.zeros(self.shape.dims, dtype=bool)
        for region in self.regions:
            union |= region.mask
        return _freeze(union)


@dataclass(frozen=True, eq=False)
class MeasuredSignal:
    """Known values of a source signal on a weighted region set.

    ``samples`` is a full-grid array holding the measured values inside the
    region union and exact zeros everywhere else.
    """

    regions: WeightedRegionSet
    samples: np.ndarray

    def __post_init__(self):
        samples = _grid_array(self.samples, self.regions.shape, np.float64, "samples")
        if not np.isfinite(samples).all():
            raise ParameterError("measured samples must be finite")
        if np.any(samples[~self.regions.union_mask] != 0.0):
            raise ValidationError(
                "measured samples must be identically zero outside the region union"
            )
        object.__setattr__(self, "samples", _freeze(samples))

    @classmethod
    def from_signal(cls, regions: WeightedRegionSet, signal: Signal) -> "MeasuredSignal":
        """Truncate a full signal to the region union."""
        if signal.shape != regions.shape:
            raise ParameterError(
                f"signal dims {signal.shape.dims} do not match region dims {regions.shape.dims}"
            )
        samples = np.where(regions.union_mask, signal.values, 0.0)
        return cls(regions, samples)

    @property
    def shape(self) -> GridShape:
        return self.regions.shape


def make_spectral_support(shape: GridShape, half_bandwidth) -> SpectralSupport:
    """Rectangular lowpass support: per-axis wrapped bin index <= half-bandwidth.

    ``half_bandwidth[i]`` must satisfy ``0 <= half_bandwidth[i] < dims[i] / 2``;
    the resulting mask is Hermitian-symmetric by construction.
    """
    hb = _index_tuple(half_bandwidth, shape.ndim, "half_bandwidth")
    for axis, (d, h) in enumerate(zip(shape.dims, hb)):
        if h < 0 or 2 * h >= d:
            raise ParameterError(
                f"half_bandwidth[{axis}] = {h} out of range [0, {d}/2) for axis length {d}"
            )
    mask = np.ones(shape.dims, dtype=bool)
    for axis, (d, h) in enumerate(zip(shape.dims, hb)):
        idx = np.arange(d)
        wrapped = np.minimum(idx, d - idx)
        keep = wrapped <= h
        mask &= keep.reshape([-1 if a == axis else 1 for a in range(shape.ndim)])
    return SpectralSupport(shape, mask)


def region_from_rect(shape: GridShape, corner, extent) -> Region:
    """Axis-aligned box region with the given corner (inclusive) and extent."""
    corner = _index_tuple(corner, shape.ndim, "corner")
    extent = _index_tuple(extent, shape.ndim, "extent")
    for axis, (d, c, e) in enumerate(zip(shape.dims, corner, extent)):
        if e < 1:
            raise ParameterError(f"extent[{axis}] = {e}, must be >= 1")
        if c < 0 or c + e > d:
            raise ParameterError(
                f"box [{c}, {c + e}) on axis {axis} exceeds grid bounds [0, {d})"
            )
    mask = np.zeros(shape.dims, dtype=bool)
    mask[tuple(slice(c, c + e) for c, e in zip(corner, extent))] = True
    return Region(shape, mask)


def validate_weighted_regions(regions, weights) -> WeightedRegionSet:
    """Bundle regions and weights, enforcing every set-level invariant."""
    return WeightedRegionSet(tuple(regions), tuple(weights))
