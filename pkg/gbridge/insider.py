"""Insider trading with information on functionals of the return.

Market: dS_t / S_t = a_t d⟨M⟩_t + dM_t with a Gaussian martingale M. The
insider knows ∫_0^T g dM = y' := y - ⟨⟨a, g⟩⟩ from time 0 and stops trading
at T - epsilon. Under the enlarged filtration M has the drift rate

    b_t = g(t)ᵀ Σ(t)⁻¹ (y' - ∫_0^t g dM),     Σ = ⟨⟨g⟩⟩.
"""
import logging
from dataclasses import dataclass

import numpy as np

from config import NUMERICS_CONFIG
from gbridge.canonical import sde_node_count
from gbridge.core import SamplePath
from gbridge.errors import InvalidArgumentError, UnsupportedError
from gbridge.harness import estimate_mean
from gbridge.models import bracket_increments, martingale_paths
from gbridge.wiener import gram_function, inner_product

LOGGER = logging.getLogger(__name__)

LAWS = ('enlarged', 'reference')


@dataclass(frozen=True, eq=False)
class MarketSpec:
    model: object
    a: object
    cond: object
    epsilon: float
    mu: float = None
    sigma: float = None

    def __post_init__(self):
        if not self.model.is_martingale:
            raise UnsupportedError("the insider market needs a Gaussian martingale model")
        if not self.a.grid.same_as(self.cond.grid):
            raise InvalidArgumentError("a and the conditioning functions live on different grids")
        if not 0 < self.epsilon <= self.cond.grid.T:
            raise InvalidArgumentError(f"epsilon must be in (0, T], got {self.epsilon}")
        if not np.all(np.isfinite(self.a.values)):
            raise InvalidArgumentError("a must be finite")

    @property
    def grid(self):
        return self.cond.grid

    @property
    def stop_index(self):
        """Last trading node, the largest t_k <= T - epsilon."""
        return sde_node_count(self.grid, self.epsilon)

    @property
    def effective_epsilon(self):
        """T - t_stop: the no-trading window actually used on this grid."""
        return float(self.grid.T - self.grid.times[self.stop_index])

    @property
    def epsilon_on_grid(self):
        tol = NUMERICS_CONFIG['node_tolerance'] * max(self.grid.T, 1.0)
        return abs(self.effective_epsilon - self.epsilon) <= tol

    def gram(self):
        return gram_function(self.cond, self.model)


@dataclass(frozen=True, eq=False)
class PortfolioPath:
    grid: object
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape[-1] != self.grid.n + 1:
            raise InvalidArgumentError("portfolio needs one value per grid node")
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("portfolio values must be finite")
        object.__setattr__(self, 'values', values)


def adjusted_targets(spec):
    """y' = y - ⟨⟨a, g⟩⟩."""
    shifts = np.array([inner_product(spec.a, g, spec.model) for g in spec.cond.gs])
    return spec.cond.y - shifts


def _drift_weights(spec, gram, last):
    gram.require_valid_until(last)
    g = spec.cond.matrix[:, :last + 1].T
    return np.einsum('kij,kj->ki', gram.inverses[:last + 1], g)


def insider_drift(spec, t, m_path_prefix, gram=None):
    """Drift rate of M under the enlarged filtration at node t."""
    grid = spec.grid
    k = grid.index_of(t)
    if k > spec.stop_index:
        raise InvalidArgumentError(f"t={t} lies after the last trading time T - epsilon")
    gram = spec.gram() if gram is None else gram
    weight = _drift_weights(spec, gram, k)[k]
    values = m_path_prefix.values if isinstance(m_path_prefix, SamplePath) \
        else np.asarray(m_path_prefix, dtype=float)
    reached = spec.cond.matrix[:, :k] @ np.diff(values[:k + 1])
    return float(weight @ (adjusted_targets(spec) - reached))


def optimal_portfolio(spec, who, t, m_path_prefix, gram=None):
    k = spec.grid.index_of(t)
    if k > spec.stop_index:
        raise InvalidArgumentError(f"t={t} lies after the last trading time T - epsilon")
    if who == 'ordinary':
        return float(spec.a.values[k])
    if who == 'insider':
        return float(spec.a.values[k]) + insider_drift(spec, t, m_path_prefix, gram=gram)
    raise InvalidArgumentError(f"who must be 'ordinary' or 'insider', got {who!r}")


def insider_portfolios(spec, m_paths, gram=None):
    """Insider optimum a + b on every trading node for a batch of M paths; shape (B, stop)."""
    gram = spec.gram() if gram is None else gram
    last = spec.stop_index
    weights = _drift_weights(spec, gram, last)[:last]
    reached = _reached(spec, np.atleast_2d(m_paths), last)
    b = np.einsum('ki,bki->bk', weights, adjusted_targets(spec) - reached)
    return spec.a.values[:last] + b


def _reached(spec, values, last):
    """∫_0^{t_k} g dM for k < last; shape (B, last, N)."""
    dM = np.diff(values[:, :last + 1], axis=-1)
    G = spec.cond.matrix[:, :last].T
    reached = np.zeros((values.shape[0], last, spec.cond.N))
    reached[:, 1:] = np.cumsum(dM[:, :-1, None] * G[:-1], axis=1)
    return reached


def log_wealth(spec, pi, m_path, v0=1.0):
    """log v0 + Σ π ΔM + ½ Σ π (2a - π) Δ⟨M⟩ over the trading nodes."""
    if not v0 > 0:
        raise InvalidArgumentError(f"initial wealth must be positive, got {v0}")
    last = spec.stop_index
    values = m_path.values if isinstance(m_path, SamplePath) else np.asarray(m_path, dtype=float)
    pi_values = pi.values if isinstance(pi, PortfolioPath) else np.asarray(pi, dtype=float)
    if values.shape[-1] != spec.grid.n + 1:
        raise InvalidArgumentError("martingale path lives on a different grid")
    d_bracket = bracket_increments(spec.model, spec.grid)[:last]
    p = pi_values[..., :last]
    a = spec.a.values[:last]
    dM = np.diff(values[..., :last + 1], axis=-1)
    result = np.log(v0) + np.sum(p * dM, axis=-1) + 0.5 * np.sum(p * (2 * a - p) * d_bracket, axis=-1)
    return float(result) if np.ndim(result) == 0 else result


def _gram_pieces(spec, gram):
    last = spec.stop_index
    gram.require_valid_until(last)
    return gram.initial, gram.matrices[last], gram.inverses[0], gram.inverses[last]


def delta_from_gram(y, sigma0, sigma_e):
    """Insider gain from the Gram matrices at 0 and at the last trading time.

    Usable with Gram matrices known in closed form; ``insider_delta`` feeds it
    the quadrature ones.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    sigma0 = np.atleast_2d(np.asarray(sigma0, dtype=float))
    sigma_e = np.atleast_2d(np.asarray(sigma_e, dtype=float))
    if sigma0.shape != (y.size, y.size) or sigma_e.shape != sigma0.shape:
        raise InvalidArgumentError(f"Gram matrices must be {y.size}x{y.size}")
    sign0, logdet0 = np.linalg.slogdet(sigma0)
    sign_e, logdet_e = np.linalg.slogdet(sigma_e)
    if sign0 <= 0 or sign_e <= 0:
        raise InvalidArgumentError("Gram matrices must be positive definite")
    gap = np.linalg.inv(sigma_e) - np.linalg.inv(sigma0)
    return float(0.5 * y @ gap @ y + 0.5 * np.trace(gap @ sigma0) + 0.5 * (logdet_e - logdet0))


def insider_delta(spec, gram=None):
    """Additional expected log utility of the insider, averaged with y' held fixed."""
    gram = spec.gram() if gram is None else gram
    sigma0, sigma_e, _, _ = _gram_pieces(spec, gram)
    return delta_from_gram(adjusted_targets(spec), sigma0, sigma_e)


def conditional_delta(spec, gram=None):
    """Utility gain of the insider under the law conditioned on the realised y'."""
    gram = spec.gram() if gram is None else gram
    sigma0, sigma_e, inv0, inv_e = _gram_pieces(spec, gram)
    y = adjusted_targets(spec)
    last = spec.stop_index
    quadratic = y @ inv0 @ (sigma0 - sigma_e) @ inv0 @ y
    return float(0.5 * (quadratic + np.log(gram.dets[0] / gram.dets[last])
                        - spec.cond.N + np.trace(inv0 @ sigma_e)))


def bs_example_delta(mu, sigma, T, epsilon):
    """Closed form for Brownian returns, constant a = mu/sigma and g = (1, (T - t)/T), y = 0."""
    if not sigma > 0:
        raise InvalidArgumentError(f"sigma must be positive, got {sigma}")
    if not T > 0:
        raise InvalidArgumentError(f"T must be positive, got {T}")
    if not 0 < epsilon <= T:
        raise InvalidArgumentError(f"epsilon must be in (0, T], got {epsilon}")
    r = T / epsilon
    sharpe = (mu / sigma) ** 2
    return float(0.5 * sharpe * (3 * T * r ** 3 - 6 * T * r ** 2 + 4 * T * r - T)
                 + 2 * r ** 3 - 3 * r ** 2 + 2 * r - 2 * np.log(r) - 1)


def expected_utility_gap(spec, law='enlarged', gram=None):
    """Exact mean of the per-path gap that ``simulate_utility_gap`` samples.

    With e_k = y' - ∫_0^{t_k} g dM and b_k = w_kᵀ e_k the mean is
    ½ Σ w_kᵀ E[e_k e_kᵀ] w_k Δ⟨M⟩_k; the second moment of e follows the
    grid recursion of the chosen law.
    """
    if law not in LAWS:
        raise InvalidArgumentError(f"law must be one of {LAWS}, got {law!r}")
    gram = spec.gram() if gram is None else gram
    last = spec.stop_index
    d_bracket = bracket_increments(spec.model, spec.grid)[:last]
    weights = _drift_weights(spec, gram, last)[:last]
    G = spec.cond.matrix[:, :last]
    y = adjusted_targets(spec)
    second = np.outer(y, y)
    total = 0.0
    for k in range(last):
        w, g, dq = weights[k], G[:, k], d_bracket[k]
        total += 0.5 * (w @ second @ w) * dq
        if law == 'enlarged':
            # 漂移把 e 推向 0: e_{k+1} = (I - Δ⟨M⟩ g wᵀ) e_k - g ΔN_k
            step = np.eye(spec.cond.N) - dq * np.outer(g, w)
            second = step @ second @ step.T
        second = second + dq * np.outer(g, g)
    return float(total)


def _gap_paths(spec, gram, rng, count, law):
    """Per-path log V(insider) - log V(ordinary)."""
    grid = spec.grid
    last = spec.stop_index
    d_bracket = bracket_increments(spec.model, grid)[:last]
    weights = _drift_weights(spec, gram, last)[:last]
    G = spec.cond.matrix[:, :last]
    y = adjusted_targets(spec)
    reference = martingale_paths(spec.model, grid, rng, count)
    if law == 'reference':
        b = np.einsum('ki,bki->bk', weights, y - _reached(spec, reference, last))
        return 0.5 * np.sum(b * b * d_bracket, axis=1)
    noise = np.diff(reference[:, :last + 1], axis=-1)
    # 在扩大的信息流下 M 带漂移 b
    reached = np.zeros((count, spec.cond.N))
    gain = np.zeros(count)
    for k in range(last):
        b = (y - reached) @ weights[k]
        dM = noise[:, k] + b * d_bracket[k]
        gain += b * dM - 0.5 * b * b * d_bracket[k]
        reached += dM[:, None] * G[:, k]
    return gain


def simulate_utility_gap(spec, paths, seed, law='enlarged', progress=False, gram=None):
    """Monte Carlo mean and SE of the insider's log-utility gain.

    ``law='enlarged'`` simulates M with its information drift (conditioned on
    y'); ``law='reference'`` averages ½∫b² d⟨M⟩ along unconditioned paths.
    """
    if law not in LAWS:
        raise InvalidArgumentError(f"law must be one of {LAWS}, got {law!r}")
    gram = spec.gram() if gram is None else gram
    gram.require_valid_until(spec.stop_index)

    def worker(stream, count):
        return _gap_paths(spec, gram, stream.generator(), count, law)

    mean, se = estimate_mean(worker, paths, seed, progress=progress)
    LOGGER.info("utility gap (%s law): %.6f ± %.6f over %d paths", law, mean, se, paths)
    return mean, se
