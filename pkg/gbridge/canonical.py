"""Canonical (adapted) bridges of continuous Gaussian martingales.

Kernels, with Σ(t) = ⟨⟨g⟩⟩(t) the remaining Gram function:

    ℓ_g(t, s)  = -g(t)ᵀ Σ(t)⁻¹ g(s)
    ℓ_g*(t, s) =  g(t)ᵀ Σ(s)⁻¹ g(s)

ℓ_g* solves ℓ_g + ℓ_g* = ∫_s^t ℓ_g(t, u) ℓ_g*(u, s) d⟨M⟩_u. Because Σ is
itself the left-point ⟨M⟩-sum on the grid, the discrete resolvent equation
holds to rounding.
"""
import logging
from dataclasses import dataclass

import numpy as np

from gbridge.core import SamplePath
from gbridge.errors import InvalidArgumentError
from gbridge.models import bracket_increments, martingale_paths
from gbridge.orthogonal import complete_tail
from gbridge.wiener import gram_function

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BridgeKernelPair:
    """Lower-triangular node matrices of ℓ_g and ℓ_g* (NaN where Σ is degenerate)."""

    grid: object
    ell: np.ndarray
    ell_star: np.ndarray
    gram: object


def _gram(cond, model, gram):
    return gram_function(cond, model) if gram is None else gram


def _node_weights(cond, gram):
    """c_k = Σ(t_k)⁻¹ g(t_k) on valid nodes, NaN elsewhere; shape (n + 1, N)."""
    g = cond.matrix.T
    weights = np.full_like(g, np.nan)
    valid = gram.valid
    weights[valid] = np.einsum('kij,kj->ki', gram.inverses[valid], g[valid])
    return weights


def build_kernels(cond, model, gram=None):
    gram = _gram(cond, model, gram)
    A = cond.matrix
    weights = _node_weights(cond, gram)
    ell_matrix = np.tril(-(weights @ A))
    ell_star_matrix = np.tril(A.T @ weights.T)
    LOGGER.debug("kernel pair built on %d valid nodes", int(gram.valid.sum()))
    return BridgeKernelPair(cond.grid, ell_matrix, ell_star_matrix, gram)


def _check_order(grid, t, s):
    k = grid.index_of(t)
    j = grid.index_of(s)
    if j > k:
        raise InvalidArgumentError(f"kernels need s <= t, got s={s}, t={t}")
    return k, j


def ell(cond, model, t, s, gram=None):
    gram = _gram(cond, model, gram)
    k, j = _check_order(cond.grid, t, s)
    A = cond.matrix
    return float(-A[:, k] @ gram.inverse_at(k) @ A[:, j])


def ell_star(cond, model, t, s, gram=None):
    """Resolvent kernel ℓ_g*(t, s) = g(t)ᵀ Σ(s)⁻¹ g(s)."""
    gram = _gram(cond, model, gram)
    k, j = _check_order(cond.grid, t, s)
    gram.inverse_at(k)
    A = cond.matrix
    return float(A[:, k] @ gram.inverse_at(j) @ A[:, j])


def ell_star_ratio(cond, model, t, s, gram=None):
    """-ℓ_g(t, s)·|Σ|(t)/|Σ|(s); agrees with :func:`ell_star` for N = 1 and on the diagonal."""
    gram = _gram(cond, model, gram)
    k, j = _check_order(cond.grid, t, s)
    gram.inverse_at(j)
    return -ell(cond, model, t, s, gram=gram) * gram.dets[k] / gram.dets[j]


def resolvent_residual(cond, model, t, s, gram=None):
    """ℓ_g + ℓ_g* - ∫_s^t ℓ_g(t, u) ℓ_g*(u, s) d⟨M⟩_u with a left-point sum."""
    gram = _gram(cond, model, gram)
    grid = cond.grid
    k, j = _check_order(grid, t, s)
    A = cond.matrix
    inv_t = gram.inverse_at(k)
    inv_s = gram.inverse_at(j)
    d_bracket = bracket_increments(model, grid)
    u = np.arange(j, k)
    left = -(A[:, k] @ inv_t @ A[:, u])
    right = A[:, u].T @ inv_s @ A[:, j]
    integral = float(np.sum(left * right * d_bracket[u]))
    lhs = -A[:, k] @ inv_t @ A[:, j] + A[:, k] @ inv_s @ A[:, j]
    return float(lhs - integral)


def discrete_resolvent(cond, model, s, gram=None):
    """Solve the discretised resolvent equation for ℓ_g*(·, s) by forward substitution.

    Returns the values on the nodes t_k, k = index(s) .. last valid node.
    """
    gram = _gram(cond, model, gram)
    grid = cond.grid
    j = grid.index_of(s)
    gram.inverse_at(j)
    last = gram.last_valid_index
    A = cond.matrix
    d_bracket = bracket_increments(model, grid)
    weights = _node_weights(cond, gram)
    solution = np.zeros(last - j + 1)
    for row, k in enumerate(range(j, last + 1)):
        ell_row = -(weights[k] @ A[:, j:k + 1])
        solution[row] = -ell_row[0] + np.sum(ell_row[:-1] * solution[:row] * d_bracket[j:k])
    return solution


def sde_node_count(grid, epsilon):
    """Index of the last node produced by the SDE; later nodes come from the completion."""
    if not epsilon > 0:
        raise InvalidArgumentError(f"epsilon must be positive, got {epsilon}")
    return grid.last_index_before(grid.T - epsilon)


def kernel_energy(cond, model, epsilon, gram=None):
    """Σ_k Σ_{j<k} ℓ_g(t_k, t_j)² Δ⟨M⟩_j Δ⟨M⟩_k over the SDE nodes."""
    gram = _gram(cond, model, gram)
    grid = cond.grid
    k_eps = sde_node_count(grid, epsilon)
    gram.require_valid_until(k_eps)
    weights = _node_weights(cond, gram)[:k_eps]
    d_bracket = bracket_increments(model, grid)[:k_eps]
    seen = gram.initial - gram.matrices[:k_eps]
    return float(np.sum(np.einsum('ki,kij,kj->k', weights, seen, weights) * d_bracket))


def _target_drift(cond, d_bracket, weights, k_eps):
    """Noiseless bridge toward y: D_{k+1} = D_k + Δ⟨M⟩_k g_kᵀ Σ_k⁻¹ (y - G_k(D))."""
    G = cond.matrix[:, :-1]
    steps = np.zeros(k_eps)
    reached = np.zeros(cond.N)
    for k in range(k_eps):
        steps[k] = d_bracket[k] * (weights[k] @ (cond.y - reached))
        reached = reached + G[:, k] * steps[k]
    return steps


def canonical_transform(cond, model, driving, epsilon, gram=None):
    """Map driving martingale paths (B, n + 1) to canonical bridge paths.

    On the SDE nodes ``X_{k+1} = X_k + ΔM_k - Δ⟨M⟩_k g_kᵀ Σ_{j<=k} Σ_j⁻¹ g_j ΔM_j``
    plus the deterministic drift toward y; the nodes after T - epsilon are
    completed by the orthogonal projection of the remaining driving increments.
    """
    gram = _gram(cond, model, gram)
    grid = cond.grid
    driving = np.asarray(driving, dtype=float)
    if driving.shape[-1] != grid.n + 1:
        raise InvalidArgumentError(
            f"driving paths have {driving.shape[-1]} nodes, grid has {grid.n + 1}")
    k_eps = sde_node_count(grid, epsilon)
    gram.require_valid_until(k_eps)
    d_bracket = bracket_increments(model, grid)
    weights = _node_weights(cond, gram)[:k_eps]
    G = cond.matrix[:, :-1]

    dM = np.diff(driving, axis=-1)
    accumulated = np.cumsum(dM[..., :k_eps, None] * weights, axis=-2)
    drift = d_bracket[:k_eps] * np.einsum('...ki,ik->...k', accumulated, G[:, :k_eps])
    steps = dM.copy()
    steps[..., :k_eps] = dM[..., :k_eps] - drift
    if np.any(cond.y):
        steps[..., :k_eps] += _target_drift(cond, d_bracket, weights, k_eps)

    values = np.empty_like(driving)
    values[..., 0] = driving[..., 0]
    values[..., 1:] = driving[..., :1] + np.cumsum(steps, axis=-1)
    return complete_tail(values, k_eps, G, cond.y, np.diag(d_bracket))


def simulate_canonical_bridges(cond, model, seed, epsilon, count, gram=None):
    rng = seed.generator()
    driving = martingale_paths(model, cond.grid, rng, count)
    return canonical_transform(cond, model, driving, epsilon, gram=gram)


def simulate_canonical_bridge(cond, model, grid, seed, epsilon):
    if not grid.same_as(cond.grid):
        raise InvalidArgumentError("conditioning functions live on a different grid")
    values = simulate_canonical_bridges(cond, model, seed, epsilon, 1)[0]
    return SamplePath(grid, values)


def rn_log_density(path, t, cond, model, gram=None):
    """log dP^g_t/dP_t along a martingale path (or a batch of paths).

    Σ_k I_k ΔM_k - ½ Σ_k I_k² Δ⟨M⟩_k with I_k = ∫_0^{t_k} ℓ_g(t_k, s) dM_s.
    """
    gram = _gram(cond, model, gram)
    grid = cond.grid
    values = path.values if isinstance(path, SamplePath) else np.asarray(path, dtype=float)
    single = values.ndim == 1
    batch = np.atleast_2d(values)
    k = grid.index_of(t)
    if k == 0:
        return 0.0 if single else np.zeros(batch.shape[0])
    gram.require_valid_until(k - 1)
    weights = _node_weights(cond, gram)[:k]
    d_bracket = bracket_increments(model, grid)[:k]
    dM = np.diff(batch[:, :k + 1], axis=-1)
    # G_k 只用 t_k 之前的增量
    reached = np.cumsum(dM[:, :, None] * cond.matrix[:, :k].T, axis=1)
    prior = np.zeros_like(reached)
    prior[:, 1:] = reached[:, :-1]
    inner = -np.einsum('ki,bki->bk', weights, prior)
    result = np.sum(inner * dM, axis=-1) - 0.5 * np.sum(inner ** 2 * d_bracket, axis=-1)
    return float(result[0]) if single else result
