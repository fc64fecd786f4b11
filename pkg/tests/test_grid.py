import itertools

import numpy as np
import pytest

from bandex import (
    GridShape,
    MeasuredSignal,
    ParameterError,
    Signal,
    SpectralSupport,
    ValidationError,
    make_spectral_support,
    region_from_rect,
    validate_weighted_regions,
)

from common import random_signal


class TestGridShape:
    def test_basic(self):
        shape = GridShape((4, 6))
        assert shape.ndim == 2
        assert shape.size == 24

    @pytest.mark.parametrize("dims", [(), (0,), (4, -1), (4, 0)])
    def test_invalid_dims(self, dims):
        with pytest.raises(ParameterError):
            GridShape(dims)

    def test_ravel_round_trip_is_identity(self):
        shape = GridShape((3, 4, 2))
        for index in itertools.product(range(3), range(4), range(2)):
            flat = shape.ravel_index(index)
            assert shape.unravel_index(flat) == index
        assert sorted(
            shape.ravel_index(i) for i in itertools.product(range(3), range(4), range(2))
        ) == list(range(24))


class TestSignal:
    def test_reshapes_flat_input(self):
        shape = GridShape((2, 3))
        sig = Signal(shape, [1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
        assert sig.values.shape == (2, 3)
        assert sig.values[1, 2] == 6.0

    def test_size_mismatch(self):
        with pytest.raises(ParameterError):
            Signal(GridShape((4,)), [1.0, 2.0])

    @pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
    def test_rejects_non_finite(self, bad):
        with pytest.raises(ParameterError):
            Signal(GridShape((2,)), [1.0, bad])

    def test_values_are_read_only(self):
        sig = random_signal(GridShape((4, 4)), 0)
        with pytest.raises(ValueError):
            sig.values[0, 0] = 7.0


class TestMakeSpectralSupport:
    def test_dc_only(self):
        support = make_spectral_support(GridShape((8,)), [0])
        assert support.bin_count == 1
        assert support.mask[0]

    def test_wrapped_symmetry_on_8(self):
        support = make_spectral_support(GridShape((8,)), [1])
        assert sorted(np.flatnonzero(support.mask)) == [0, 1, 7]

    def test_2d_count_matches_enumeration(self):
        # independent oracle: count bins whose wrapped index is within 4 per axis
        dims = (16, 16)
        expected = sum(
            1
            for k0 in range(16)
            for k1 in range(16)
            if min(k0, 16 - k0) <= 4 and min(k1, 16 - k1) <= 4
        )
        assert expected == 81
        support = make_spectral_support(GridShape(dims), [4, 4])
        assert support.bin_count == expected

    @pytest.mark.parametrize("hb", [[4], [-1], [5]])
    def test_out_of_range(self, hb):
        with pytest.raises(ParameterError):
            make_spectral_support(GridShape((8,)), hb)

    def test_hermitian_symmetry_exhaustive(self):
        shape = GridShape((6, 5))
        support = make_spectral_support(shape, [2, 2])
        for k0 in range(6):
            for k1 in range(5):
                assert support.mask[k0, k1] == support.mask[(-k0) % 6, (-k1) % 5]


class TestSpectralSupport:
    def test_rejects_non_hermitian(self):
        mask = np.zeros(8, dtype=bool)
        mask[[0, 1]] = True  # partner of 1 is 7, not set
        with pytest.raises(ValidationError):
            SpectralSupport(GridShape((8,)), mask)

    def test_rejects_empty(self):
        with pytest.raises(ValidationError):
            SpectralSupport(GridShape((8,)), np.zeros(8, dtype=bool))


class TestRegionFromRect:
    def test_full_grid(self):
        region = region_from_rect(GridShape((8,)), [0], [8])
        assert region.sample_count == 8

    def test_interior_samples(self):
        region = region_from_rect(GridShape((8,)), [2], [3])
        assert sorted(np.flatnonzero(region.mask)) == [2, 3, 4]

    def test_2d_box(self):
        region = region_from_rect(GridShape((16, 16)), [4, 4], [4, 4])
        assert region.sample_count == 16

    @pytest.mark.parametrize("corner,extent", [([6], [4]), ([0], [0]), ([-1], [2])])
    def test_out_of_bounds(self, corner, extent):
        with pytest.raises(ParameterError):
            region_from_rect(GridShape((8,)), corner, extent)

    def test_mask_is_read_only(self):
        region = region_from_rect(GridShape((8,)), [2], [3])
        with pytest.raises(ValueError):
            region.mask[0] = True


class TestValidateWeightedRegions:
    def test_four_uniform_quarters(self):
        shape = GridShape((16,))
        regions = [region_from_rect(shape, [4 * i], [4]) for i in range(4)]
        ws = validate_weighted_regions(regions, [0.25, 0.25, 0.25, 0.25])
        assert len(ws) == 4

    def test_single_region_unit_weight(self):
        shape = GridShape((8,))
        ws = validate_weighted_regions([region_from_rect(shape, [0], [8])], [1.0])
        assert ws.weights == (1.0,)

    def test_thirds_pass_tolerance(self):
        shape = GridShape((9,))
        regions = [region_from_rect(shape, [3 * i], [3]) for i in range(3)]
        validate_weighted_regions(regions, [1 / 3, 1 / 3, 1 / 3])

    def test_sum_violation(self):
        shape = GridShape((8,))
        regions = [region_from_rect(shape, [0], [4]), region_from_rect(shape, [4], [4])]
        with pytest.raises(ValidationError, match="sum"):
            validate_weighted_regions(regions, [0.6, 0.5])

    def test_nonpositive_weight_names_index(self):
        shape = GridShape((8,))
        regions = [region_from_rect(shape, [0], [4]), region_from_rect(shape, [4], [4])]
        with pytest.raises(ValidationError, match="weight 1"):
            validate_weighted_regions(regions, [1.0, 0.0])

    def test_shape_mismatch_names_index(self):
        r0 = region_from_rect(GridShape((8,)), [0], [8])
        r1 = region_from_rect(GridShape((16,)), [0], [16])
        with pytest.raises(ValidationError, match="region 1"):
            validate_weighted_regions([r0, r1], [0.5, 0.5])

    def test_overlapping_regions_accepted(self):
        shape = GridShape((8,))
        regions = [region_from_rect(shape, [0], [6]), region_from_rect(shape, [3], [5])]
        ws = validate_weighted_regions(regions, [0.5, 0.5])
        assert ws.union_mask.all()


class TestMeasuredSignal:
    def test_from_signal_masks_outside(self):
        shape = GridShape((8,))
        ws = validate_weighted_regions([region_from_rect(shape, [2], [3])], [1.0])
        sig = random_signal(shape, 1)
        meas = MeasuredSignal.from_signal(ws, sig)
        assert np.all(meas.samples[~ws.union_mask] == 0.0)
        assert np.array_equal(meas.samples[ws.union_mask], sig.values[ws.union_mask])

    def test_rejects_nonzero_outside_union(self):
        shape = GridShape((8,))
        ws = validate_weighted_regions([region_from_rect(shape, [2], [3])], [1.0])
        with pytest.raises(ValidationError):
            MeasuredSignal(ws, np.ones(8))
