import numpy as np
import pytest

from gbridge.core import SeedSpec, make_uniform_grid
from gbridge.errors import InvalidArgumentError, NumericalDegeneracyError
from gbridge.models import (MeanFunction, brownian_motion, cholesky_factor, covariance_at,
                            covariance_matrix, fractional_brownian_motion, gaussian_martingale,
                            generic_model, increment_covariance, sample_path, sample_paths,
                            tabulated_bracket, tabulated_covariance)


class TestCovarianceAt:
    def test_brownian_minimum(self, bm):
        assert covariance_at(bm, 0.3, 0.6) == pytest.approx(0.3)

    def test_fbm_half_is_brownian(self):
        assert covariance_at(fractional_brownian_motion(0.5), 0.3, 0.6) == pytest.approx(0.3)

    def test_fbm_unit_variance(self):
        assert covariance_at(fractional_brownian_motion(0.75), 1.0, 1.0) == pytest.approx(1.0)

    def test_out_of_range(self, bm):
        with pytest.raises(InvalidArgumentError):
            covariance_at(bm, 1.5, 0.2)

    def test_martingale_uses_bracket_of_minimum(self):
        model = gaussian_martingale(lambda t: np.asarray(t) ** 2, 1.0)
        assert covariance_at(model, 0.3, 0.8) == pytest.approx(0.09)

    def test_fbm_self_similarity(self):
        model = fractional_brownian_motion(0.3, 4.0)
        c, H = 2.0, 0.3
        assert covariance_at(model, c * 0.7, c * 1.1) == pytest.approx(c ** (2 * H) * covariance_at(model, 0.7, 1.1))


class TestModelValidation:
    @pytest.mark.parametrize('hurst', [0.0, 1.0, -0.2])
    def test_hurst_range(self, hurst):
        with pytest.raises(InvalidArgumentError):
            fractional_brownian_motion(hurst)

    def test_bracket_must_vanish_at_zero(self):
        with pytest.raises(InvalidArgumentError):
            gaussian_martingale(lambda t: np.asarray(t) + 1.0)

    def test_bracket_must_increase(self):
        with pytest.raises(InvalidArgumentError):
            gaussian_martingale(lambda t: np.sin(6 * np.asarray(t)))


class TestCovarianceMatrix:
    @pytest.mark.parametrize('model', [brownian_motion(1.0), fractional_brownian_motion(0.25),
                                       fractional_brownian_motion(0.9)])
    def test_symmetric_and_factorizable(self, model):
        grid = make_uniform_grid(1.0, 64)
        R = covariance_matrix(model, grid)
        np.testing.assert_array_equal(R, R.T)
        L = cholesky_factor(R[1:, 1:])
        np.testing.assert_allclose(L @ L.T, R[1:, 1:], atol=1e-8)

    def test_increment_covariance_of_brownian_motion(self, bm):
        grid = make_uniform_grid(1.0, 8)
        np.testing.assert_allclose(increment_covariance(bm, grid), np.eye(8) / 8)
        generic = generic_model(lambda t, s: np.minimum(t, s))
        np.testing.assert_allclose(increment_covariance(generic, grid), np.eye(8) / 8, atol=1e-15)

    def test_tabulated_models(self):
        grid = make_uniform_grid(1.0, 4)
        bracket = gaussian_martingale(tabulated_bracket([0.0, 0.5, 2.0], 1.0))
        assert covariance_at(bracket, 0.25, 1.0) == pytest.approx(0.25)
        R = covariance_matrix(brownian_motion(1.0), grid)
        model = generic_model(tabulated_covariance(R, 1.0))
        np.testing.assert_allclose(covariance_matrix(model, grid), R)
        with pytest.raises(InvalidArgumentError):
            covariance_at(model, 0.3, 0.3)


class TestCholesky:
    def test_reports_failing_minor(self):
        cov = np.array([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]])
        with pytest.raises(NumericalDegeneracyError) as info:
            cholesky_factor(cov)
        assert info.value.minor == 2

    def test_jitter_rescues_semidefinite(self):
        v = np.array([1.0, 2.0, 3.0])
        L = cholesky_factor(np.outer(v, v))
        assert np.all(np.isfinite(L))


class TestMeanFunction:
    def test_integrate_left_point(self):
        grid = make_uniform_grid(1.0, 4)
        mean = MeanFunction(grid, grid.times ** 2)
        g = np.ones(5)
        assert mean.integrate(g) == pytest.approx(1.0)
        assert MeanFunction.zero(grid).is_zero

    def test_from_uniform_values(self):
        grid = make_uniform_grid(1.0, 4)
        mean = MeanFunction.from_uniform_values([0.0, 2.0], grid)
        np.testing.assert_allclose(mean.values, 2 * grid.times)


class TestSamplePath:
    def test_node_zero_is_mean(self, bm):
        grid = make_uniform_grid(1.0, 16)
        mean = MeanFunction(grid, 3.0 + grid.times)
        path = sample_path(bm, mean, grid, SeedSpec(1))
        assert path.values[0] == 3.0

    def test_reproducible(self, bm):
        grid = make_uniform_grid(1.0, 16)
        a = sample_paths(bm, None, grid, SeedSpec(5, 2), 3)
        b = sample_paths(bm, None, grid, SeedSpec(5, 2), 3)
        np.testing.assert_array_equal(a, b)

    def test_brownian_terminal_variance(self, bm):
        """Var(X_1) within 4 standard errors of 1."""
        grid = make_uniform_grid(1.0, 64)
        x = sample_paths(bm, None, grid, SeedSpec(11), 100000)[:, -1]
        se = np.sqrt(2.0 / x.size)
        assert abs(x.var() - 1.0) < 4 * se

    def test_fbm_cross_covariance(self):
        model = fractional_brownian_motion(0.75)
        grid = make_uniform_grid(1.0, 32)
        paths = sample_paths(model, None, grid, SeedSpec(12), 100000)
        x, y = paths[:, 16], paths[:, 32]
        target = 0.5 * (0.5 ** 1.5 + 1.0 - 0.5 ** 1.5)
        products = x * y
        se = products.std() / np.sqrt(products.size)
        assert abs(products.mean() - target) < 4 * se
