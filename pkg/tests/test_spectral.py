import numpy as np
import pytest

from bandex import (
    BandlimitedBasis,
    ContractionEstimate,
    ConvergenceError,
    EigenSpectrum,
    GridShape,
    MeasuredSignal,
    ParameterError,
    RegularizationParams,
    Signal,
    ValidationError,
    bandlimit_project,
    combined_lipschitz,
    composite_apply,
    eigen_spectrum,
    lipschitz_regularized,
    lipschitz_unregularized,
    make_spectral_support,
    papoulis_step,
    region_from_rect,
    suggest_weights,
    tau_upper_bound,
    validate_weighted_regions,
)

from common import rng


def dense_q(region, support):
    """Independent dense oracle: Q_ij = sum over region of B_i * B_j."""
    basis = BandlimitedBasis(support)
    matrix = basis.dense_matrix()
    rows = matrix[region.mask.reshape(-1)]
    return basis, rows.T @ rows


def synthetic_spectrum(eigenvalues):
    ev = np.asarray(eigenvalues, dtype=float)
    return EigenSpectrum(region_index=0, eigenvalues=ev, residuals=np.zeros(ev.size))


class TestBandlimitedBasis:
    @pytest.mark.parametrize(
        "dims,hb", [((16,), [1]), ((8, 8), [1, 1]), ((16, 16), [4, 4]), ((6, 4, 4), [1, 1, 1])]
    )
    def test_orthonormal_and_dimension(self, dims, hb):
        support = make_spectral_support(GridShape(dims), hb)
        basis = BandlimitedBasis(support)
        assert basis.dim == support.bin_count
        matrix = basis.dense_matrix()
        gram = matrix.T @ matrix
        assert np.abs(gram - np.eye(basis.dim)).max() < 1e-12

    def test_synthesize_analyze_round_trip(self):
        support = make_spectral_support(GridShape((8, 8)), [2, 2])
        basis = BandlimitedBasis(support)
        coeffs = rng(1).standard_normal(basis.dim)
        values = basis.synthesize(coeffs)
        assert np.abs(basis.analyze(values) - coeffs).max() < 1e-12

    def test_synthesized_signals_are_in_band(self):
        shape = GridShape((12, 10))
        support = make_spectral_support(shape, [2, 2])
        basis = BandlimitedBasis(support)
        f = Signal(shape, basis.synthesize(rng(2).standard_normal(basis.dim)))
        pf = bandlimit_project(f, support)
        assert np.linalg.norm(pf.values - f.values) <= 1e-12 * f.norm()

    def test_dense_matrix_matches_fft_synthesis(self):
        support = make_spectral_support(GridShape((8, 8)), [1, 1])
        basis = BandlimitedBasis(support)
        for col in range(basis.dim):
            unit = np.zeros(basis.dim)
            unit[col] = 1.0
            assert np.abs(
                basis.dense_matrix()[:, col] - basis.synthesize(unit).reshape(-1)
            ).max() < 1e-12


class TestEigenSpectrum:
    def test_full_spectrum_matches_dense_oracle_and_trace(self):
        shape = GridShape((16,))
        support = make_spectral_support(shape, [1])  # 3 bins
        region = region_from_rect(shape, [2], [8])
        spectrum = eigen_spectrum(region, support, count=3, tol=1e-10)
        _, q = dense_q(region, support)
        dense = np.linalg.eigvalsh(q)[::-1]
        assert np.abs(spectrum.eigenvalues - dense).max() < 1e-6
        assert abs(spectrum.eigenvalues.sum() - 3 * 8 / 16) < 1e-8

    def test_partial_2d_spectrum_matches_dense_oracle(self):
        shape = GridShape((8, 8))
        support = make_spectral_support(shape, [1, 1])  # 9 bins
        region = region_from_rect(shape, (1, 2), (4, 3))
        spectrum = eigen_spectrum(region, support, count=4, tol=1e-10)
        _, q = dense_q(region, support)
        dense = np.linalg.eigvalsh(q)[::-1]
        assert np.abs(spectrum.eigenvalues - dense[:4]).max() < 1e-6
        assert np.all(spectrum.residuals < 1e-9)

    def test_eigenpairs_satisfy_operator_equation(self):
        shape = GridShape((8, 8))
        support = make_spectral_support(shape, [1, 1])
        region = region_from_rect(shape, (2, 1), (3, 5))
        spectrum = eigen_spectrum(region, support, count=3, tol=1e-11)
        for lam, psi in zip(spectrum.eigenvalues, spectrum.eigenvectors):
            image = composite_apply(psi, region, support)
            assert np.linalg.norm(image.values - lam * psi.values) < 1e-9
            pf = bandlimit_project(psi, support)
            assert np.linalg.norm(pf.values - psi.values) <= 1e-8

    def test_full_grid_region_gives_all_ones(self):
        shape = GridShape((16,))
        support = make_spectral_support(shape, [1])
        region = region_from_rect(shape, [0], [16])
        spectrum = eigen_spectrum(region, support, count=3, tol=1e-10)
        assert np.allclose(spectrum.eigenvalues, 1.0, atol=1e-10)

    def test_single_sample_region_is_rank_one(self):
        shape = GridShape((16,))
        support = make_spectral_support(shape, [1])
        region = region_from_rect(shape, [5], [1])
        spectrum = eigen_spectrum(region, support, count=3, tol=1e-10)
        assert spectrum.eigenvalues[0] == pytest.approx(3 / 16, abs=1e-8)
        assert np.all(spectrum.eigenvalues[1:] < 1e-8)

    def test_count_beyond_dimension_rejected(self):
        shape = GridShape((16,))
        support = make_spectral_support(shape, [1])
        with pytest.raises(ParameterError):
            eigen_spectrum(region_from_rect(shape, [0], [8]), support, count=4)

    def test_nonconvergence_carries_residuals(self):
        shape = GridShape((32,))
        support = make_spectral_support(shape, [6])
        region = region_from_rect(shape, [0], [16])
        with pytest.raises(ConvergenceError) as excinfo:
            eigen_spectrum(region, support, count=2, tol=1e-15, max_iterations=1)
        assert excinfo.value.residuals is not None

    def test_deterministic_and_sign_fixed(self):
        shape = GridShape((8, 8))
        support = make_spectral_support(shape, [1, 1])
        region = region_from_rect(shape, (2, 2), (4, 4))
        a = eigen_spectrum(region, support, count=3, tol=1e-10)
        b = eigen_spectrum(region, support, count=3, tol=1e-10)
        assert np.array_equal(a.eigenvalues, b.eigenvalues)
        for pa, pb in zip(a.eigenvectors, b.eigenvectors):
            assert np.array_equal(pa.values, pb.values)
            flat = pa.values.reshape(-1)
            first = flat[np.abs(flat) > 1e-12 * np.abs(flat).max()][0]
            assert first > 0

    def test_validator_rejects_out_of_range_values(self):
        with pytest.raises(ValidationError):
            synthetic_spectrum([1.5, 0.2])
        with pytest.raises(ValidationError):
            synthetic_spectrum([0.2, 0.5])


class TestLipschitzFormulas:
    def test_unregularized_values(self):
        assert lipschitz_unregularized(synthetic_spectrum([0.9, 0.3]), 1) == pytest.approx(0.7)
        assert lipschitz_unregularized(synthetic_spectrum([1.0, 1.0]), 1) == pytest.approx(0.0)
        assert lipschitz_unregularized(synthetic_spectrum([0.5, 0.0]), 1) == pytest.approx(1.0)

    def test_unregularized_order_out_of_range(self):
        with pytest.raises(ParameterError):
            lipschitz_unregularized(synthetic_spectrum([0.5]), 1)

    def test_regularized_values(self):
        spec = synthetic_spectrum([0.9, 0.3])
        params = RegularizationParams(mu=0.005, tau=1.0)
        assert lipschitz_regularized(spec, 1, params) == pytest.approx(0.695)

    def test_regularized_at_tau_bound(self):
        spec = synthetic_spectrum([0.9, 0.5])
        bound = tau_upper_bound(spec, 1, 0.005)
        assert bound == pytest.approx(2.0 / 1.41, abs=1e-12)
        params = RegularizationParams(mu=0.005, tau=bound)
        expected = 1.0 - 2.0 * (0.5 + 0.005) / (0.9 + 0.5 + 2 * 0.005)
        assert lipschitz_regularized(spec, 1, params) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.2837, abs=1e-4)

    def test_regularized_reduces_to_unregularized(self):
        spec = synthetic_spectrum([0.9, 0.3])
        params = RegularizationParams(mu=0.0, tau=1.0)
        assert lipschitz_regularized(spec, 1, params) == pytest.approx(
            lipschitz_unregularized(spec, 1)
        )

    def test_regularized_rejects_tau_above_bound(self):
        spec = synthetic_spectrum([0.9, 0.5])
        params = RegularizationParams(mu=0.005, tau=1.5)
        with pytest.raises(ParameterError):
            lipschitz_regularized(spec, 1, params)

    def test_tau_upper_bound_values(self):
        assert tau_upper_bound(synthetic_spectrum([1.0, 1.0]), 1, 0.0) == pytest.approx(1.0)
        assert tau_upper_bound(synthetic_spectrum([1.0, 0.0]), 1, 0.5) == pytest.approx(1.0)

    def test_lipschitz_at_tau_bound_monotone_in_eigenvalue_spread(self):
        # with tau at its bound the constant increases in lambda_0 - lambda_N
        lam_n, mu = 0.3, 0.005
        values = []
        for lam_0 in np.linspace(lam_n, 1.0, 50):
            spec = synthetic_spectrum([lam_0, lam_n])
            params = RegularizationParams(mu=mu, tau=tau_upper_bound(spec, 1, mu))
            values.append(lipschitz_regularized(spec, 1, params))
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))

    def test_nested_regions_have_ordered_spectra(self):
        shape = GridShape((16, 16))
        support = make_spectral_support(shape, [2, 2])
        inner = region_from_rect(shape, (4, 4), (5, 5))
        outer = region_from_rect(shape, (3, 3), (9, 9))
        dim = support.bin_count
        spec_inner = eigen_spectrum(inner, support, count=dim, tol=1e-9)
        spec_outer = eigen_spectrum(outer, support, count=dim, tol=1e-9)
        assert np.all(spec_outer.eigenvalues >= spec_inner.eigenvalues - 1e-9)
        order = 3
        assert lipschitz_unregularized(spec_outer, order) <= (
            lipschitz_unregularized(spec_inner, order) + 1e-9
        )


class TestContractionMeasurement:
    def test_single_region_step_contracts_on_eigen_subspace(self):
        shape = GridShape((16, 16))
        support = make_spectral_support(shape, [2, 2])
        region = region_from_rect(shape, (2, 3), (9, 8))
        ws = validate_weighted_regions([region], [1.0])
        basis = BandlimitedBasis(support)
        h = Signal(shape, basis.synthesize(rng(3).standard_normal(basis.dim)))
        meas = MeasuredSignal.from_signal(ws, h)
        order = 5
        spectrum = eigen_spectrum(region, support, count=order + 1, tol=1e-11)
        predicted = lipschitz_unregularized(spectrum, order)
        g = rng(4)
        worst = 0.0
        for _ in range(20):
            coeffs = g.standard_normal(order + 1)
            err = sum(c * psi.values for c, psi in zip(coeffs, spectrum.eigenvectors))
            f = Signal(shape, h.values + err)
            out = papoulis_step(f, meas, support)
            worst = max(worst, np.linalg.norm(out.values - h.values) / np.linalg.norm(err))
        estimate = ContractionEstimate(predicted=predicted, measured=worst, subspace_dim=order + 1)
        assert estimate.satisfied

    def test_combined_constant_bounds_weighted_step_on_full_subspace(self):
        shape = GridShape((16, 16))
        support = make_spectral_support(shape, [2, 2])
        dim = support.bin_count
        r1 = region_from_rect(shape, (2, 3), (9, 8))
        r2 = region_from_rect(shape, (9, 1), (6, 12))
        weights = [0.6, 0.4]
        ws = validate_weighted_regions([r1, r2], weights)
        basis = BandlimitedBasis(support)
        h = Signal(shape, basis.synthesize(rng(5).standard_normal(basis.dim)))
        meas = MeasuredSignal.from_signal(ws, h)
        spectra = [
            eigen_spectrum(r, support, count=dim, tol=1e-10, compute_vectors=False)
            for r in (r1, r2)
        ]
        predicted = combined_lipschitz(spectra, weights, dim - 1)
        g = rng(6)
        worst = 0.0
        base = papoulis_step(h, meas, support)
        for _ in range(20):
            err = basis.synthesize(g.standard_normal(dim))
            f = Signal(shape, h.values + err)
            out = papoulis_step(f, meas, support)
            worst = max(worst, np.linalg.norm(out.values - base.values) / np.linalg.norm(err))
        assert worst <= predicted + 1e-6


class TestSuggestWeights:
    def test_proportional_rule(self):
        spectra = [synthetic_spectrum([1.0, lam]) for lam in (0.6, 0.2, 0.2)]
        assert suggest_weights(spectra, 1) == pytest.approx([0.6, 0.2, 0.2])

    def test_identical_regions_get_uniform_weights(self):
        shape = GridShape((16,))
        support = make_spectral_support(shape, [2])
        regions = [region_from_rect(shape, [2], [6]), region_from_rect(shape, [8], [6])]
        spectra = [
            eigen_spectrum(r, support, count=3, tol=1e-10, region_index=i)
            for i, r in enumerate(regions)
        ]
        weights = suggest_weights(spectra, 2)
        assert weights == pytest.approx([0.5, 0.5], abs=1e-9)

    def test_two_to_one_ratio(self):
        spectra = [synthetic_spectrum([1.0, 0.6]), synthetic_spectrum([1.0, 0.3])]
        assert suggest_weights(spectra, 1) == pytest.approx([2 / 3, 1 / 3])

    def test_weights_are_valid_and_monotone(self):
        spectra = [synthetic_spectrum([1.0, lam]) for lam in (0.9, 0.5, 0.1)]
        weights = suggest_weights(spectra, 1)
        assert sum(weights) == pytest.approx(1.0, abs=1e-12)
        assert all(0 < w <= 1 for w in weights)
        assert weights[0] > weights[1] > weights[2]

    def test_all_zero_is_degenerate(self):
        spectra = [synthetic_spectrum([0.5, 0.0]), synthetic_spectrum([0.4, 0.0])]
        with pytest.raises(ValidationError, match="degenerate"):
            suggest_weights(spectra, 1)

    def test_single_zero_eigenvalue_is_rejected(self):
        spectra = [synthetic_spectrum([0.5, 0.4]), synthetic_spectrum([0.4, 0.0])]
        with pytest.raises(ValidationError, match="region 1"):
            suggest_weights(spectra, 1)
