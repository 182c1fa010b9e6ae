"""Orthogonal (projection) bridges for any continuous Gaussian model.

The bridge is ``X_t - <<1_t, g>>ᵀ <<g>>⁻¹ (∫g dX - y)``. Every inner product is
taken from the node covariance of the grid process, so the pinning identity
``∫ g_i dX^g = y_i`` holds to rounding on every grid.
"""
import logging
from dataclasses import dataclass

import numpy as np

from config import NUMERICS_CONFIG
from gbridge.core import SamplePath
from gbridge.errors import (DegenerateConditioningError, InvalidArgumentError,
                            LinearDependenceError)
from gbridge.models import covariance_at, covariance_matrix, increment_covariance
from gbridge.wiener import is_invertible, wiener_integrals

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class OrthogonalBridge:
    """Precomputed ingredients of the orthogonal representation.

    ``cross[k, i]`` is ⟨⟨1_{t_k}, g_i⟩⟩ and ``gain`` is ``cross @ gram0_inv``.
    """

    cond: object
    model: object
    node_cov: np.ndarray
    cross: np.ndarray
    gram0: np.ndarray
    gram0_inv: np.ndarray
    gain: np.ndarray

    @property
    def grid(self):
        return self.cond.grid


def build_orthogonal(cond, model, grid=None):
    grid = cond.grid if grid is None else grid
    if not grid.same_as(cond.grid):
        raise InvalidArgumentError("conditioning functions live on a different grid")
    R = covariance_matrix(model, grid)
    G = cond.matrix[:, :-1]
    # Cov(X_{t_k}, ΔX_j) = R[k, j+1] - R[k, j]
    cross = np.diff(R, axis=1) @ G.T
    gram0 = G @ increment_covariance(model, grid, node_cov=R) @ G.T
    gram0 = 0.5 * (gram0 + gram0.T)
    if not is_invertible(gram0):
        raise LinearDependenceError(
            "⟨⟨g⟩⟩(0) is singular: the conditioning functions are linearly dependent")
    gram0_inv = np.linalg.inv(gram0)
    LOGGER.debug("orthogonal bridge built: N=%d, n=%d, cond(<<g>>)=%.3e",
                 cond.N, grid.n, np.linalg.cond(gram0))
    return OrthogonalBridge(cond, model, R, cross, gram0, gram0_inv, cross @ gram0_inv)


def transform_paths(b, values, y=None):
    """Bridge a batch of paths, shape (..., n + 1); ``y`` overrides the targets."""
    values = np.asarray(values, dtype=float)
    if values.shape[-1] != b.grid.n + 1:
        raise InvalidArgumentError(
            f"paths have {values.shape[-1]} nodes, bridge grid has {b.grid.n + 1}")
    y = b.cond.y if y is None else np.asarray(y, dtype=float)
    residual = wiener_integrals(b.cond, values) - y
    return values - residual @ b.gain.T


def transform_path(b, path):
    if not path.grid.same_as(b.grid):
        raise InvalidArgumentError("path lives on a different grid than the bridge")
    return SamplePath(path.grid, transform_paths(b, path.values))


def bridge_mean_values(b, mean, y=None):
    """Bridge mean on every node: m - gain (∫g dm - y)."""
    y = b.cond.y if y is None else np.asarray(y, dtype=float)
    drift = mean.integrate(b.cond.matrix) - y
    return mean.values - b.gain @ drift


def bridge_mean(b, mean, t):
    k = b.grid.index_of(t)
    return float(bridge_mean_values(b, mean)[k])


def bridge_covariance_matrix(b):
    cov = b.node_cov - b.gain @ b.cross.T
    return 0.5 * (cov + cov.T)


def bridge_covariance(b, t, s):
    k = b.grid.index_of(t)
    j = b.grid.index_of(s)
    return float(b.node_cov[k, j] - b.gain[k] @ b.cross[j])


def iterative_condition(path, conds, model):
    """Condition on one functional at a time.

    Each step projects with the covariance already conditioned on the
    previous functionals; the final path equals the joint transform.
    """
    grid = path.grid
    R = covariance_matrix(model, grid)
    C0 = increment_covariance(model, grid, node_cov=R)
    values = path.values.copy()
    for step, (g, target) in enumerate(conds):
        if not g.grid.same_as(grid):
            raise InvalidArgumentError("conditioning function lives on a different grid")
        cross = np.diff(R, axis=1) @ g.steps
        variance = float(g.steps @ np.diff(cross))
        scale = float(g.steps @ C0 @ g.steps)
        if variance <= NUMERICS_CONFIG['pivot_floor'] * scale or variance <= 0.0:
            raise DegenerateConditioningError(
                f"conditioning step {step} ({g.label or 'values'}) has zero remaining variance")
        values = values - cross * ((g.steps @ np.diff(values) - target) / variance)
        R = R - np.outer(cross, cross) / variance
        R = 0.5 * (R + R.T)
        LOGGER.debug("iterative conditioning step %d: variance %.6g", step, variance)
    return SamplePath(grid, values)


def _pin_recursion(R, pins):
    R = np.array(R, dtype=float)
    scale = max(float(np.max(np.abs(np.diag(R)))), NUMERICS_CONFIG['det_floor'])
    for p in pins:
        pivot = R[p, p]
        if pivot <= NUMERICS_CONFIG['pivot_floor'] * scale:
            raise DegenerateConditioningError(
                f"multibridge pivot at pin {p} is degenerate ({pivot:.3e})")
        R = R - np.outer(R[:, p], R[p, :]) / pivot
    return R


def multibridge_covariance(model, pin_times, t, s):
    """R_N(t, s) after pinning the process at every time in ``pin_times``."""
    points = np.array([t, s] + list(pin_times), dtype=float)
    R = np.array([[covariance_at(model, a, c) for c in points] for a in points])
    R = _pin_recursion(R, range(2, points.size))
    return float(R[0, 1])


def multibridge_covariance_matrix(model, grid, pin_times):
    """Node covariance of the multibridge on the whole grid."""
    pins = [grid.index_of(p) for p in pin_times]
    R = _pin_recursion(covariance_matrix(model, grid), pins)
    return 0.5 * (R + R.T)


def complete_tail(values, k, g_steps, y, inc_cov):
    """Rebuild the increments after node ``k`` so that the functionals hit ``y``.

    ``values`` is a batch (B, n + 1) whose increments after node k are used
    as driving noise; they are projected onto the affine set
    ``Σ_j g_j ΔX_j = y`` with the covariance ``inc_cov`` of the tail cells.
    """
    values = np.array(values, dtype=float)
    n = values.shape[-1] - 1
    if k >= n:
        return values
    tail = np.diff(values[..., k:], axis=-1)
    Gt = g_steps[:, k:]
    Ct = inc_cov[k:, k:]
    S = Gt @ Ct @ Gt.T
    if not is_invertible(S):
        raise DegenerateConditioningError(
            f"remaining Gram matrix after node {k} is degenerate; increase epsilon or the grid size")
    reached = np.diff(values[..., :k + 1], axis=-1) @ g_steps[:, :k].T
    residual = tail @ Gt.T - (np.asarray(y, dtype=float) - reached)
    tail = tail - residual @ np.linalg.solve(S, Gt @ Ct)
    values[..., k + 1:] = values[..., k:k + 1] + np.cumsum(tail, axis=-1)
    return values
