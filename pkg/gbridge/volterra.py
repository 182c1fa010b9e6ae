"""Fractional Brownian motion as an invertible Gaussian Volterra process.

V_t = ∫_0^t k(t, s) dW_s with k(t, s) = K[1_t](s) and

    K[f](s)  = c_H s^{1/2-H} I_{T-}^{H-1/2}[u^{H-1/2} f](s)
    K⁻¹[f](s) = c_H⁻¹ s^{1/2-H} I_{T-}^{1/2-H}[u^{H-1/2} f](s)

Both operators act on piecewise-constant functions. The fractional integral
of order ρ in (-1, 1) is evaluated as the cell average of
-d/dt I_{T-}^{ρ+1}, with I_{T-}^{ρ+1} integrated exactly against each cell
indicator; the power weights are replaced by their cell averages.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma

from gbridge.canonical import canonical_transform, sde_node_count
from gbridge.core import SamplePath
from gbridge.errors import InvalidArgumentError
from gbridge.models import (MeanFunction, brownian_motion, fractional_brownian_motion,
                             increment_covariance)
from gbridge.orthogonal import build_orthogonal, bridge_mean_values, complete_tail
from gbridge.wiener import GridFunction, gram_from_values

LOGGER = logging.getLogger(__name__)


def fbm_normalizing_constant(hurst):
    """c_H = sqrt(2H Γ(H + 1/2) Γ(3/2 - H) / Γ(2 - 2H))."""
    if not 0 < hurst < 1:
        raise InvalidArgumentError(f"Hurst index must be in (0, 1), got {hurst}")
    return float(np.sqrt(2.0 * hurst * gamma(hurst + 0.5) * gamma(1.5 - hurst)
                         / gamma(2.0 - 2.0 * hurst)))


def _integral_table(times, order):
    """I_{T-}^{order}[1_{[t_i, t_{i+1})}](t_k) for every node k and cell i."""
    t = times[:, None]
    upper = np.clip(times[None, 1:] - t, 0.0, None) ** order
    lower = np.clip(times[None, :-1] - t, 0.0, None) ** order
    return (upper - lower) / gamma(order + 1.0)


def fractional_weights(grid, rho):
    """Cell averages of I_{T-}^{rho} applied to each cell indicator, shape (n, n)."""
    table = _integral_table(grid.times, rho + 1.0)
    return (table[:-1] - table[1:]) / grid.steps[:, None]


def _power_average(grid, power):
    t = grid.times
    return (t[1:] ** (power + 1.0) - t[:-1] ** (power + 1.0)) / ((power + 1.0) * grid.steps)


@dataclass(frozen=True, eq=False)
class FractionalOps:
    """Discrete K and K⁻¹ for one (H, grid); cell-to-cell matrices of shape (n, n)."""

    hurst: float
    grid: object
    c_h: float
    forward: np.ndarray
    inverse: np.ndarray

    @property
    def is_brownian(self):
        return self.hurst == 0.5

    @property
    def model(self):
        return fractional_brownian_motion(self.hurst, self.grid.T)


def build_fractional_ops(hurst, grid):
    c_h = fbm_normalizing_constant(hurst)
    if hurst == 0.5:
        eye = np.eye(grid.n)
        return FractionalOps(hurst, grid, c_h, eye, eye)
    ws = _power_average(grid, 0.5 - hurst)
    wu = _power_average(grid, hurst - 0.5)
    forward = c_h * ws[:, None] * fractional_weights(grid, hurst - 0.5) * wu[None, :]
    inverse = ws[:, None] * fractional_weights(grid, 0.5 - hurst) * wu[None, :] / c_h
    LOGGER.debug("fractional operators built: H=%.3f, n=%d, c_H=%.6f", hurst, grid.n, c_h)
    return FractionalOps(float(hurst), grid, c_h, forward, inverse)


def _apply(matrix, f, ops):
    if not f.grid.same_as(ops.grid):
        raise InvalidArgumentError("function lives on a different grid than the operators")
    values = np.zeros(ops.grid.n + 1)
    values[:-1] = matrix @ f.steps
    return GridFunction(ops.grid, values, f.label)


def apply_K(f, ops):
    if ops.is_brownian:
        return GridFunction(ops.grid, f.values.copy(), f.label)
    return _apply(ops.forward, f, ops)


def apply_K_inv(f, ops):
    if ops.is_brownian:
        return GridFunction(ops.grid, f.values.copy(), f.label)
    return _apply(ops.inverse, f, ops)


def kernel_matrix(ops):
    """k(t_k, cell m) for every node k; shape (n + 1, n), zero for cells at or after t_k."""
    n = ops.grid.n
    kt = np.zeros((n + 1, n))
    kt[1:] = np.cumsum(ops.forward, axis=1).T
    return kt


def covariance_from_kernel(ops):
    """Σ_u k(t, u) k(s, u) Δu on the nodes."""
    kt = kernel_matrix(ops)
    return (kt * ops.grid.steps) @ kt.T


def brownian_side_functions(cond, ops):
    """g̃ = K[g] as cell values, shape (N, n)."""
    if ops.is_brownian:
        return cond.matrix[:, :-1].copy()
    return cond.matrix[:, :-1] @ ops.forward.T


def brownian_side_gram(cond, ops):
    """⟨⟨g̃⟩⟩^W(t) = ∫_t^T g̃ g̃ᵀ ds on every node."""
    return gram_from_values(ops.grid, brownian_side_functions(cond, ops), ops.grid.steps)


def bridge_operator(cond, ops, k_eps, gram=None):
    """Lower-triangular Q with X_k = V_k - Σ_{j<k} Q[k, j] ΔV_j on the nodes up to k_eps."""
    grid = ops.grid
    n = grid.n
    gram = brownian_side_gram(cond, ops) if gram is None else gram
    gram.require_valid_until(k_eps)
    g_tilde = brownian_side_functions(cond, ops)
    b = np.zeros_like(g_tilde)
    b[:, :k_eps] = np.einsum('kij,jk->ik', gram.inverses[:k_eps], g_tilde[:, :k_eps])
    # K⁻¹[ℓ̃*(u_m, ·)](cell j) = Σ_i g̃_i(u_m) Σ_{l<=m} Kinv[j, l] b_i(l)
    inner = np.zeros((n, n))
    for i in range(cond.N):
        partial = np.cumsum(ops.inverse * b[i][None, :], axis=1)
        inner += g_tilde[i][:, None] * partial.T
    kt = kernel_matrix(ops)
    Q = kt @ (grid.steps[:, None] * inner)
    return np.tril(Q, -1)


def volterra_bridge_transform(path, cond, ops, epsilon):
    """Canonical fBm bridge driven by the fBm path ``path``.

    Nodes up to T - epsilon come from the Volterra representation, the rest
    from the orthogonal completion of the path's own tail increments.
    """
    grid = ops.grid
    if not path.grid.same_as(grid):
        raise InvalidArgumentError("path, conditioning and operators must share one grid")
    return SamplePath(grid, volterra_bridge_paths(cond, ops, path.values, epsilon))


def volterra_bridge_paths(cond, ops, paths, epsilon):
    """Batch form of :func:`volterra_bridge_transform` on fBm node values (..., n + 1)."""
    grid = ops.grid
    paths = np.asarray(paths, dtype=float)
    if not cond.grid.same_as(grid) or paths.shape[-1] != grid.n + 1:
        raise InvalidArgumentError("path, conditioning and operators must share one grid")
    if ops.is_brownian:
        return canonical_transform(cond, brownian_motion(grid.T), paths, epsilon)
    k_eps = sde_node_count(grid, epsilon)
    Q = bridge_operator(cond, ops, k_eps)
    values = paths - np.diff(paths, axis=-1) @ Q.T
    if np.any(cond.y):
        bridge = build_orthogonal(cond, ops.model, grid)
        values = values + bridge_mean_values(bridge, MeanFunction.zero(grid))
    LOGGER.debug("volterra bridge: SDE nodes 0..%d, completion nodes %d..%d",
                 k_eps, k_eps + 1, grid.n)
    batch = values.reshape(-1, grid.n + 1)
    completed = complete_tail(batch, k_eps, cond.matrix[:, :-1], cond.y,
                              increment_covariance(ops.model, grid))
    return completed.reshape(values.shape)