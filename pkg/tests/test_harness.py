import numpy as np
import pytest

from gbridge.core import SeedSpec, make_uniform_grid
from gbridge.errors import InvalidArgumentError
from gbridge.harness import chunk_sizes, convergence_sweep, estimate_mean, estimate_moments, worker_count
from gbridge.models import brownian_motion, sample_paths


@pytest.fixture
def grid64():
    return make_uniform_grid(1.0, 64)


def brownian_generator(grid):
    model = brownian_motion(1.0)

    def generator(stream, count):
        return sample_paths(model, None, grid, stream, count)
    return generator


class TestChunks:
    def test_sizes(self):
        assert chunk_sizes(10000) == [4096, 4096, 1808]
        assert chunk_sizes(4096) == [4096]

    def test_worker_count_from_environment(self, monkeypatch):
        monkeypatch.setenv('GB_THREADS', '3')
        assert worker_count() == 3
        monkeypatch.setenv('GB_THREADS', 'many')
        with pytest.raises(InvalidArgumentError):
            worker_count()
        monkeypatch.setenv('GB_THREADS', '0')
        with pytest.raises(InvalidArgumentError):
            worker_count()


class TestEstimateMoments:
    def test_constant_paths(self, grid64):
        def generator(stream, count):
            return np.full((count, 65), 2.5)

        report = estimate_moments(generator, grid64, [(0.5, 1.0)], 1000, SeedSpec(1))
        assert report.covariance[0] == pytest.approx(0.0, abs=1e-15)
        assert report.se_covariance[0] == pytest.approx(0.0, abs=1e-7)
        assert report.mean_t[0] == pytest.approx(2.5)

    def test_brownian_variance(self, grid64):
        report = estimate_moments(brownian_generator(grid64), grid64, [(1.0, 1.0), (0.25, 0.75)],
                                  50000, SeedSpec(2))
        assert abs(report.covariance[0] - 1.0) < 4 * report.se_covariance[0]
        assert abs(report.covariance[1] - 0.25) < 4 * report.se_covariance[1]
        assert abs(report.mean_t[0]) < 4 * report.se_mean_t[0]

    def test_standard_error_scaling(self, grid64):
        small = estimate_moments(brownian_generator(grid64), grid64, [(1.0, 1.0)], 50000, SeedSpec(3))
        large = estimate_moments(brownian_generator(grid64), grid64, [(1.0, 1.0)], 100000, SeedSpec(4))
        assert 1.3 <= small.se_covariance[0] / large.se_covariance[0] <= 1.5

    def test_standard_error_is_calibrated(self):
        grid = make_uniform_grid(1.0, 8)
        generator = brownian_generator(grid)
        covered = 0
        for master in range(100):
            report = estimate_moments(generator, grid, [(1.0, 1.0)], 1000, SeedSpec(master))
            covered += abs(report.covariance[0] - 1.0) <= 4 * report.se_covariance[0]
        assert covered >= 99

    def test_independent_of_thread_count(self, grid64, monkeypatch):
        reports = []
        for threads in ('1', '4'):
            monkeypatch.setenv('GB_THREADS', threads)
            reports.append(estimate_moments(brownian_generator(grid64), grid64, [(0.5, 1.0)],
                                            10000, SeedSpec(5)))
        np.testing.assert_array_equal(reports[0].covariance, reports[1].covariance)
        np.testing.assert_array_equal(reports[0].se_covariance, reports[1].se_covariance)

    def test_needs_enough_paths(self, grid64):
        with pytest.raises(InvalidArgumentError):
            estimate_moments(brownian_generator(grid64), grid64, [(0.5, 0.5)], 99, SeedSpec(1))

    def test_frame(self, grid64):
        report = estimate_moments(brownian_generator(grid64), grid64, [(0.5, 0.5)], 2000, SeedSpec(6))
        frame = report.to_frame([0.5])
        assert list(frame.columns) == ['t', 's', 'emp_cov', 'theory_cov', 'se', 'z_score']
        assert frame['z_score'][0] == pytest.approx((report.covariance[0] - 0.5) / report.se_covariance[0])


class TestEstimateMean:
    def test_standard_normal(self):
        def worker(stream, count):
            return stream.generator().standard_normal(count)

        mean, se = estimate_mean(worker, 10000, SeedSpec(8))
        assert se == pytest.approx(0.01, rel=0.05)
        assert abs(mean) < 4 * se


class TestConvergenceSweep:
    def test_gram_is_first_order(self):
        frame = convergence_sweep('gram', [64, 128, 256])
        assert list(frame.columns) == ['n', 'residual', 'ratio']
        assert np.all((frame['ratio'][1:] >= 1.5) & (frame['ratio'][1:] <= 2.5))

    def test_resolvent_is_exact(self):
        frame = convergence_sweep('resolvent', [32, 64])
        assert np.all(frame['residual'] <= 1e-10)

    def test_fbm_kernel_decreases(self):
        frame = convergence_sweep('fbm-kernel-cov', [64, 128, 256], hurst=0.75)
        assert np.all(np.diff(frame['residual']) < 0)

    @pytest.mark.parametrize('check, n_values', [('entropy', [16, 32]), ('gram', []), ('gram', [64, 32])])
    def test_invalid(self, check, n_values):
        with pytest.raises(InvalidArgumentError):
            convergence_sweep(check, n_values)
