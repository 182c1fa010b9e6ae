import numpy as np
import pytest

from conftest import conditioning
from gbridge.core import SamplePath, SeedSpec, make_uniform_grid
from gbridge.errors import InvalidArgumentError, UnsupportedError
from gbridge.insider import (MarketSpec, PortfolioPath, adjusted_targets, bs_example_delta, delta_from_gram,
                             conditional_delta, expected_utility_gap, insider_delta, insider_drift,
                             insider_portfolios, log_wealth, optimal_portfolio, simulate_utility_gap)
from gbridge.models import brownian_motion, fractional_brownian_motion, martingale_paths
from gbridge.wiener import GridFunction


def black_scholes_market(n, epsilon, mu=1.0, sigma=1.0, T=1.0):
    """Brownian returns, a = mu/sigma, g = (1, (T - t)/T), y = 0."""
    grid = make_uniform_grid(T, n)
    a = GridFunction(grid, np.full(n + 1, mu / sigma))
    return MarketSpec(brownian_motion(T), a, conditioning(grid, ['one', 'avg']), epsilon, mu, sigma)


def endpoint_market(y, epsilon=0.1, n=256):
    grid = make_uniform_grid(1.0, n)
    a = GridFunction(grid, np.zeros(n + 1))
    return MarketSpec(brownian_motion(1.0), a, conditioning(grid, ['one'], [y]), epsilon)


class TestMarketSpec:
    def test_needs_martingale(self, grid256):
        a = GridFunction(grid256, np.zeros(257))
        with pytest.raises(UnsupportedError):
            MarketSpec(fractional_brownian_motion(0.7), a, conditioning(grid256, ['one']), 0.1)

    @pytest.mark.parametrize('epsilon', [0.0, 1.5])
    def test_epsilon_range(self, grid256, epsilon):
        a = GridFunction(grid256, np.zeros(257))
        with pytest.raises(InvalidArgumentError):
            MarketSpec(brownian_motion(1.0), a, conditioning(grid256, ['one']), epsilon)

    def test_stop_index(self):
        assert endpoint_market(0.0, epsilon=0.25).stop_index == 192

    def test_adjusted_targets(self):
        spec = black_scholes_market(1024, 0.5, mu=0.3, sigma=0.5)
        np.testing.assert_allclose(adjusted_targets(spec), [-0.6, -0.3], atol=1e-3)


class TestDrift:
    def test_endpoint_drift(self):
        spec = endpoint_market(0.7)
        path = np.zeros(257)
        path[:129] = np.linspace(0.0, 0.2, 129)
        # (0.7 - W_t) / (1 - t)
        assert insider_drift(spec, 0.5, path) == pytest.approx(1.0)
        assert optimal_portfolio(spec, 'insider', 0.5, path) == pytest.approx(1.0)
        assert optimal_portfolio(spec, 'ordinary', 0.5, path) == 0.0

    def test_only_prefix_matters(self):
        spec = endpoint_market(0.7)
        path = np.zeros(257)
        path[:129] = np.linspace(0.0, 0.2, 129)
        noisy = path.copy()
        noisy[129:] = 5.0
        assert insider_drift(spec, 0.5, noisy) == insider_drift(spec, 0.5, path)

    def test_after_stop(self):
        spec = endpoint_market(0.7)
        with pytest.raises(InvalidArgumentError):
            insider_drift(spec, 0.95, np.zeros(257))
        with pytest.raises(InvalidArgumentError):
            optimal_portfolio(spec, 'broker', 0.5, np.zeros(257))

    def test_batch_portfolios_match_pointwise(self, seed):
        spec = black_scholes_market(128, 0.25)
        W = martingale_paths(spec.model, spec.grid, seed.generator(), 2)
        batch = insider_portfolios(spec, W)
        assert batch.shape == (2, spec.stop_index)
        for k in (0, 17, spec.stop_index - 1):
            t = spec.grid.times[k]
            assert batch[1, k] == pytest.approx(optimal_portfolio(spec, 'insider', t, W[1]))


class TestLogWealth:
    def test_no_position(self):
        spec = endpoint_market(0.0, epsilon=0.5)
        pi = PortfolioPath(spec.grid, np.zeros(257))
        assert log_wealth(spec, pi, SamplePath(spec.grid, np.zeros(257)), v0=2.0) == pytest.approx(np.log(2.0))

    def test_constant_position_on_flat_path(self):
        spec = black_scholes_market(256, 0.5, mu=0.4)
        pi = np.full(257, 0.4)
        # ½ a² over [0, T - epsilon]
        assert log_wealth(spec, pi, np.zeros(257)) == pytest.approx(0.5 * 0.16 * 0.5)

    def test_ordinary_optimum(self):
        spec = black_scholes_market(256, 0.5, mu=0.4)
        flat = np.zeros(257)
        best = log_wealth(spec, spec.a.values, flat)
        for shift in (-0.3, 0.3):
            assert log_wealth(spec, spec.a.values + shift, flat) < best

    def test_gain_along_path(self):
        spec = endpoint_market(0.0, epsilon=0.5)
        path = spec.grid.times.copy()
        assert log_wealth(spec, np.ones(257), path) == pytest.approx(0.5 - 0.25)

    def test_invalid_inputs(self):
        spec = endpoint_market(0.0)
        with pytest.raises(InvalidArgumentError):
            log_wealth(spec, np.zeros(257), np.zeros(257), v0=0.0)
        with pytest.raises(InvalidArgumentError):
            log_wealth(spec, np.zeros(257), np.zeros(12))
        with pytest.raises(InvalidArgumentError):
            PortfolioPath(spec.grid, np.full(257, np.inf))


class TestClosedForm:
    def test_example_value(self):
        assert bs_example_delta(1.0, 1.0, 1.0, 0.5) == pytest.approx(10.5 - 2 * np.log(2))

    def test_no_gain_without_trading(self):
        assert bs_example_delta(0.3, 0.2, 2.0, 2.0) == pytest.approx(0.0, abs=1e-12)

    def test_decreasing_in_epsilon(self):
        values = [bs_example_delta(0.1, 0.2, 1.0, e) for e in (0.05, 0.1, 0.25, 0.5, 1.0)]
        assert all(a > b for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize('args', [(1.0, 0.0, 1.0, 0.5), (1.0, 1.0, 0.0, 0.5), (1.0, 1.0, 1.0, 0.0),
                                      (1.0, 1.0, 1.0, 1.5)])
    def test_invalid(self, args):
        with pytest.raises(InvalidArgumentError):
            bs_example_delta(*args)


def analytic_gram(u):
    """∫_{T-u}^T g gᵀ ds for g = (1, 1 - s), T = 1."""
    return np.array([[u, u ** 2 / 2], [u ** 2 / 2, u ** 3 / 3]])


class TestInsiderDelta:
    @pytest.mark.parametrize('epsilon', [0.1, 0.25, 0.5])
    def test_analytic_gram_matches_closed_form(self, epsilon):
        y = [-1.0, -0.5]
        value = delta_from_gram(y, analytic_gram(1.0), analytic_gram(epsilon))
        assert value == pytest.approx(bs_example_delta(1.0, 1.0, 1.0, epsilon), abs=1e-6)

    @pytest.mark.parametrize('epsilon, n', [(0.5, 4096), (0.25, 4096), (0.1, 40960)])
    def test_matches_closed_form(self, epsilon, n):
        spec = black_scholes_market(n, epsilon)
        assert spec.epsilon_on_grid
        assert insider_delta(spec) == pytest.approx(bs_example_delta(1.0, 1.0, 1.0, epsilon), abs=1e-3)

    def test_epsilon_snaps_to_grid(self):
        spec = black_scholes_market(4096, 0.1)
        assert not spec.epsilon_on_grid
        assert spec.stop_index == 3686
        assert spec.effective_epsilon == pytest.approx(410 / 4096)
        expected = bs_example_delta(1.0, 1.0, 1.0, spec.effective_epsilon)
        assert insider_delta(spec) == pytest.approx(expected, rel=1e-4)

    def test_gram_shapes(self):
        with pytest.raises(InvalidArgumentError):
            delta_from_gram([0.0, 0.0], np.eye(2), np.eye(3))

    def test_zero_when_stopping_at_once(self):
        spec = black_scholes_market(256, 1.0)
        assert insider_delta(spec) == 0.0
        assert conditional_delta(spec) == pytest.approx(0.0, abs=1e-12)
        assert expected_utility_gap(spec) == 0.0

    def test_decreasing_in_epsilon(self):
        values = [insider_delta(black_scholes_market(512, e)) for e in (0.0625, 0.125, 0.25, 0.5)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_grid_expectation_approaches_formulas(self):
        spec = black_scholes_market(4096, 0.5)
        gram = spec.gram()
        assert expected_utility_gap(spec, 'reference', gram) == pytest.approx(insider_delta(spec, gram), rel=1e-2)
        assert expected_utility_gap(spec, 'enlarged', gram) == pytest.approx(conditional_delta(spec, gram), rel=1e-2)

    def test_endpoint_reference_expectation(self):
        # b_t = (y - W_t)/(1 - t), E[b_t²] = (y² + t)/(1 - t)²
        spec = endpoint_market(0.5, epsilon=0.5, n=1024)
        h = 1 / 1024
        t = np.arange(512) * h
        expected = 0.5 * np.sum((0.25 + t) / (1 - t) ** 2) * h
        assert expected_utility_gap(spec, 'reference') == pytest.approx(expected, rel=1e-12)

    def test_enlarged_law_simulation(self):
        spec = black_scholes_market(512, 0.5)
        mean, se = simulate_utility_gap(spec, 20000, SeedSpec(42))
        assert abs(mean - expected_utility_gap(spec, 'enlarged')) < 4 * se

    def test_reference_law_simulation(self):
        spec = black_scholes_market(512, 0.5)
        mean, se = simulate_utility_gap(spec, 20000, SeedSpec(43), law='reference')
        assert abs(mean - expected_utility_gap(spec, 'reference')) < 4 * se

    def test_unknown_law(self):
        spec = black_scholes_market(64, 0.5)
        with pytest.raises(InvalidArgumentError):
            simulate_utility_gap(spec, 1000, SeedSpec(1), law='physical')
        with pytest.raises(InvalidArgumentError):
            expected_utility_gap(spec, law='physical')
