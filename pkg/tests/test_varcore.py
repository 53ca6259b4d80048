import numpy as np
import pytest

from tvoir.errors import CovarianceNotPDError, InsufficientLengthError, PreconditionError
from tvoir.varcore import (
    CoefficientSchedule,
    EpochData,
    TvVarModel,
    build_benchmark_model,
    companion_matrix,
    constant_model,
    oscillator_coefficients,
    simulate,
    spectral_radius,
    stability_report,
)


class TestTvVarModel:
    def test_shapes_and_lags(self):
        m = build_benchmark_model(T=50)
        assert (m.T, m.M, m.p) == (50, 4, 2)
        A = m.lag_matrices(0)
        assert A.shape == (2, 4, 4)
        np.testing.assert_allclose(A[0, 0, 1], 1.0)
        np.testing.assert_allclose(A[1, 0, 2], 0.0)

    def test_rejects_non_pd_sigma(self):
        with pytest.raises(CovarianceNotPDError):
            TvVarModel(np.zeros((3, 2, 2)), np.broadcast_to(np.diag([1.0, -1.0]), (3, 2, 2)))

    def test_rejects_bad_shapes(self):
        with pytest.raises(PreconditionError):
            TvVarModel(np.zeros((3, 2, 3)), np.broadcast_to(np.eye(2), (3, 2, 2)))
        with pytest.raises(PreconditionError):
            TvVarModel(np.zeros((3, 2, 2)), np.broadcast_to(np.eye(2), (4, 2, 2)))

    def test_unavailable_steps_skip_pd_check(self):
        sig = np.stack([np.eye(2), np.full((2, 2), np.nan)])
        m = TvVarModel(np.zeros((2, 2, 2)), sig, available=[True, False])
        assert m.available.tolist() == [True, False]

    def test_arrays_read_only(self):
        m = build_benchmark_model(T=5)
        with pytest.raises(ValueError):
            m.coeffs[0, 0, 0] = 1.0


class TestBenchmarkModel:
    def test_oscillator_coefficients(self):
        a1, a2 = oscillator_coefficients(0.85, 10, 100)
        np.testing.assert_allclose(a1, 1.7 * np.cos(0.2 * np.pi))
        np.testing.assert_allclose(a1, 1.37533, atol=1e-5)
        np.testing.assert_allclose(a2, -0.7225)

    def test_coupling_entries(self):
        m = build_benchmark_model(T=400)
        a = CoefficientSchedule().evaluate(400, 100)
        A = np.array([m.lag_matrices(n) for n in range(400)])
        np.testing.assert_allclose(A[:, 0, 0, 1], 1 - a)
        np.testing.assert_allclose(A[:, 1, 0, 2], a)
        np.testing.assert_allclose(A[:, 0, 1, 3], 1.5)
        np.testing.assert_allclose(A[:, 1, 2, 3], 1.5)
        np.testing.assert_allclose(A[:, 0, 3, 3], 2 * 0.85 * np.cos(2 * np.pi * 0.35))
        np.testing.assert_allclose(m.sigma_u, np.broadcast_to(np.eye(4), (400, 4, 4)))

    def test_square_schedule_switches_every_200_samples(self):
        a = CoefficientSchedule("square", 0.0, 0.3, 4.0).evaluate(1000, 100)
        np.testing.assert_array_equal(a[:200], 0.0)
        np.testing.assert_array_equal(a[200:400], 0.3)
        np.testing.assert_array_equal(a[400:600], 0.0)
        assert np.count_nonzero(np.diff(a)) == 4

    def test_sinusoid_range(self):
        a = CoefficientSchedule("sine").evaluate(400, 100)
        assert a[0] == 0.0
        np.testing.assert_allclose(a.max(), 0.3)
        assert a.min() >= 0.0

    def test_unknown_waveform(self):
        with pytest.raises(PreconditionError):
            CoefficientSchedule("triangle")

    def test_plateau_mask_central_half(self):
        mask = CoefficientSchedule().plateau_mask(400, 100)
        assert mask.sum() == 200
        assert not mask[:50].any() and mask[50:150].all() and not mask[150:250].any()

    def test_stable_everywhere(self):
        for kind in ("square", "sinusoid"):
            assert stability_report(build_benchmark_model(CoefficientSchedule(kind))).all()


class TestStability:
    def test_zero_is_stable(self):
        assert stability_report(constant_model(np.zeros((2, 3, 3)), np.eye(3), T=4)).all()

    @pytest.mark.parametrize("a,stable", [(0.99, True), (1.0, False), (1.05, False)])
    def test_scalar_boundary(self, a, stable):
        assert stability_report(constant_model([a], [[1.0]], T=3)).tolist() == [stable] * 3

    def test_companion_layout(self):
        A = np.arange(8.0).reshape(2, 4)
        C = companion_matrix(A)
        np.testing.assert_array_equal(C[:2], A)
        np.testing.assert_array_equal(C[2:], [[1, 0, 0, 0], [0, 1, 0, 0]])

    def test_spectral_radius_of_benchmark(self):
        np.testing.assert_allclose(spectral_radius(build_benchmark_model(T=10)), 0.85)


class TestSimulate:
    def test_white_noise_variance(self):
        data = simulate(constant_model([0.0], [[1.0]], T=100), R=2, seed=3)
        assert data.samples.shape == (2, 1, 100)
        assert 0.7 <= data.samples.var() <= 1.3

    def test_benchmark_shape(self):
        data = simulate(build_benchmark_model(), R=10, seed=0)
        assert data.samples.shape == (10, 4, 1000)
        assert data.fs == 100.0

    def test_bit_reproducible(self):
        m = build_benchmark_model(T=200)
        a = simulate(m, R=3, seed=11, burn_in=50).samples
        b = simulate(m, R=3, seed=11, burn_in=50).samples
        assert a.tobytes() == b.tobytes()
        c = simulate(m, R=3, seed=12, burn_in=50).samples
        assert not np.array_equal(a, c)

    def test_realizations_independent_of_R(self):
        m = build_benchmark_model(T=100)
        a = simulate(m, R=2, seed=5).samples
        b = simulate(m, R=4, seed=5).samples
        np.testing.assert_array_equal(a, b[:2])

    def test_unstable_diverges(self):
        m = constant_model([1.05], [[1.0]], T=300)
        assert not stability_report(m).any()
        x = simulate(m, R=1, seed=0, burn_in=0).samples[0, 0]
        assert np.abs(x[-50:]).mean() > 1e3 * np.abs(x[:50]).mean()

    def test_too_short(self):
        with pytest.raises(InsufficientLengthError):
            simulate(constant_model(np.zeros((3, 1, 1)), [[1.0]], T=3))

    def test_ar1_sample_variance(self):
        x = simulate(constant_model([0.5], [[1.0]], T=20000), R=1, seed=2).samples
        np.testing.assert_allclose(x.var(), 4 / 3, rtol=0.05)


class TestEpochData:
    def test_default_labels(self):
        d = EpochData(np.zeros((2, 3, 5)))
        assert list(d.channel_labels) == ["Y1", "Y2", "Y3"]
        assert (d.R, d.M, d.T) == (2, 3, 5)

    def test_rejects_nan(self):
        x = np.zeros((1, 2, 4))
        x[0, 1, 2] = np.nan
        with pytest.raises(PreconditionError):
            EpochData(x)

    def test_standardized(self, rng):
        x = rng.normal(3.0, 5.0, size=(4, 2, 300))
        s = EpochData(x).standardized().samples
        np.testing.assert_allclose(s.mean(axis=(0, 2)), 0.0, atol=1e-12)
        np.testing.assert_allclose(s.std(axis=(0, 2)), 1.0)
