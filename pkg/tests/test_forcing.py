import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pgvarmion.errors import CovarianceError, UnsupportedForcingError
from pgvarmion.forcing import (
    GRF_GRID_POINTS,
    ForcingSample,
    _stable_cholesky,
    forcing_from_record,
    fourier_forcing_1d,
    fourier_forcing_2d,
    grf_forcing,
    sample_forcing,
)


class TestFourier1d:
    def test_single_mode_is_plain_sine(self):
        coeffs = np.zeros(20)
        coeffs[0] = 1.0
        s = ForcingSample(family="fourier1d", stream_seed=0, index=0,
                          scale=1.0, coefficients=coeffs)
        x = np.linspace(0.0, 1.0, 101)
        np.testing.assert_allclose(s.evaluate(x), np.sin(np.pi * x), atol=1e-14)

    def test_normalized_on_reference_grid(self):
        x = np.linspace(0.0, 1.0, 2001)
        for index in range(20):
            s = fourier_forcing_1d(42, index)
            assert abs(np.max(np.abs(s.evaluate(x))) - 1.0) < 1e-12

    def test_dense_sup_close_to_one(self):
        x = np.linspace(0.0, 1.0, 10001)
        for index in range(10):
            s = fourier_forcing_1d(7, index)
            peak = np.max(np.abs(s.evaluate(x)))
            assert 1.0 - 1e-12 <= peak <= 1.001

    def test_deterministic(self):
        a = fourier_forcing_1d(3, 5)
        b = fourier_forcing_1d(3, 5)
        np.testing.assert_array_equal(a.coefficients, b.coefficients)
        assert a.scale == b.scale

    def test_distinct_indexes_differ(self):
        a = fourier_forcing_1d(3, 5)
        b = fourier_forcing_1d(3, 6)
        assert not np.array_equal(a.coefficients, b.coefficients)

    def test_amplitude_mean_near_zero(self):
        draws = np.array([fourier_forcing_1d(11, i).coefficients[:10]
                          for i in range(10000)])
        assert abs(draws.mean()) < 0.05

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2**31), index=st.integers(0, 10**6))
    def test_normalization_invariant(self, seed, index):
        s = fourier_forcing_1d(seed, index)
        x = np.linspace(0.0, 1.0, 2001)
        assert abs(np.max(np.abs(s.evaluate(x))) - 1.0) < 1e-12


class TestFourier2d:
    def test_has_hundred_modes(self):
        s = fourier_forcing_2d(1, 0)
        assert s.coefficients.shape == (300,)

    def test_normalized_on_reference_grid(self):
        g = np.linspace(0.0, 1.0, 201)
        for index in range(5):
            s = fourier_forcing_2d(9, index)
            assert abs(np.max(np.abs(s.evaluate_grid(g, g))) - 1.0) < 1e-12

    def test_grid_matches_pointwise(self):
        s = fourier_forcing_2d(4, 2)
        xs = np.linspace(0.1, 0.9, 7)
        ys = np.linspace(0.05, 0.95, 5)
        grid = s.evaluate_grid(xs, ys)
        pts = np.array([[x, y] for x in xs for y in ys])
        np.testing.assert_allclose(grid.ravel(), s.evaluate(pts), atol=1e-13)

    @settings(max_examples=10, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2**31))
    def test_grid_pointwise_agreement(self, seed):
        s = fourier_forcing_2d(seed, 0)
        rng = np.random.default_rng(0)
        pts = rng.uniform(0.0, 1.0, (13, 2))
        one_by_one = np.array([s.evaluate_grid([p[0]], [p[1]])[0, 0] for p in pts])
        np.testing.assert_allclose(s.evaluate(pts), one_by_one, atol=1e-13)

    def test_deterministic(self):
        a = fourier_forcing_2d(8, 1)
        b = fourier_forcing_2d(8, 1)
        np.testing.assert_array_equal(a.coefficients, b.coefficients)
        assert a.scale == b.scale


class TestGrf:
    def test_deterministic(self):
        a = grf_forcing(5, 3, length_scale=0.1)
        b = grf_forcing(5, 3, length_scale=0.1)
        np.testing.assert_array_equal(a.coefficients, b.coefficients)
        assert a.scale == b.scale

    def test_normalized_on_grid(self):
        grid = np.linspace(0.0, 1.0, GRF_GRID_POINTS)
        for index in range(10):
            s = grf_forcing(2, index, length_scale=0.1)
            assert abs(np.max(np.abs(s.evaluate(grid))) - 1.0) < 1e-12

    def test_dense_sup_close_to_one(self):
        x = np.linspace(0.0, 1.0, 10001)
        for index in range(10):
            s = grf_forcing(2, index, length_scale=0.05)
            peak = np.max(np.abs(s.evaluate(x)))
            assert 1.0 - 1e-12 <= peak <= 1.01

    def test_unit_pointwise_variance_before_normalization(self):
        # kernel diagonal is 1, so raw grid values are standard normal
        raws = np.array([grf_forcing(13, i, length_scale=0.1).coefficients
                         for i in range(300)])
        for col in (57, 128, 200):
            assert 0.55 < raws[:, col].var() < 1.6

    def test_shorter_length_scale_is_rougher(self):
        def total_variation(s):
            vals = s.scale * s.coefficients
            return np.sum(np.abs(np.diff(vals)))

        tv_smooth = np.mean([total_variation(grf_forcing(21, i, 0.1))
                             for i in range(100)])
        tv_rough = np.mean([total_variation(grf_forcing(21, i, 0.05))
                            for i in range(100)])
        assert tv_rough > tv_smooth

    def test_spline_matches_evaluate(self):
        s = grf_forcing(6, 0, length_scale=0.1)
        x = np.linspace(0.0, 1.0, 313)
        np.testing.assert_allclose(s.spline(x), s.evaluate(x), atol=1e-14)

    def test_spline_rejected_for_fourier(self):
        with pytest.raises(UnsupportedForcingError):
            _ = fourier_forcing_1d(0, 0).spline


class TestRecords:
    @pytest.mark.parametrize("make", [
        lambda: fourier_forcing_1d(17, 4),
        lambda: fourier_forcing_2d(17, 4),
        lambda: grf_forcing(17, 4, length_scale=0.05),
    ])
    def test_round_trip(self, make):
        s = make()
        t = forcing_from_record(s.record())
        np.testing.assert_array_equal(s.coefficients, t.coefficients)
        assert s.scale == t.scale
        x = np.linspace(0.0, 1.0, 57)
        if s.family == "fourier2d":
            pts = np.column_stack([x, x[::-1]])
            np.testing.assert_array_equal(s.evaluate(pts), t.evaluate(pts))
        else:
            np.testing.assert_array_equal(s.evaluate(x), t.evaluate(x))


class TestDispatchAndErrors:
    def test_dispatch(self):
        assert sample_forcing("fourier1d", 1).family == "fourier1d"
        assert sample_forcing("fourier2d", 1).family == "fourier2d"
        assert sample_forcing("grf1d", 1, length_scale=0.1).family == "grf1d"

    def test_unknown_family(self):
        with pytest.raises(UnsupportedForcingError):
            sample_forcing("pink-noise", 0)

    def test_grf_needs_length_scale(self):
        with pytest.raises(UnsupportedForcingError):
            sample_forcing("grf1d", 0)

    def test_cholesky_jitter_recovers_singular(self):
        L = _stable_cholesky(np.ones((3, 3)))
        assert L.shape == (3, 3)

    def test_cholesky_rejects_indefinite(self):
        with pytest.raises(CovarianceError):
            _stable_cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))
