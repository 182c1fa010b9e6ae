"""Discretised abstract Wiener calculus.

Integrands are step functions on the grid: a GridFunction takes the value
``values[i]`` on ``[t_i, t_{i+1})``; smooth integrands are sampled at left
endpoints. Inner products are the covariances of the corresponding Wiener
integrals of the grid process.
"""
import logging
from dataclasses import dataclass

import numpy as np

from config import NUMERICS_CONFIG
from gbridge.core import SamplePath
from gbridge.errors import (DegenerateConditioningError, InvalidArgumentError,
                            LinearDependenceError, UnsupportedError)
from gbridge.models import bracket_increments, increment_covariance

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: object
    values: np.ndarray
    label: str = ''

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.times.shape:
            raise InvalidArgumentError(
                f"grid function has {values.size} values for {self.grid.times.size} nodes")
        object.__setattr__(self, 'values', values)

    @property
    def steps(self):
        """每个区间 [t_i, t_{i+1}) 上的取值"""
        return self.values[:-1]

    def scaled(self, c):
        return GridFunction(self.grid, c * self.values, self.label)


def preset_function(name, grid, u=None):
    """Named integrands: 'one' (g = 1), 'avg' (g = (T - t)/T), 'ind' (1 on [0, u))."""
    t = grid.times
    if name == 'one':
        return GridFunction(grid, np.ones_like(t), 'one')
    if name == 'avg':
        return GridFunction(grid, (grid.T - t) / grid.T, 'avg')
    if name == 'ind':
        if u is None:
            raise InvalidArgumentError("preset 'ind' needs u")
        k = grid.index_of(u)
        values = np.zeros_like(t)
        values[:k] = 1.0
        return GridFunction(grid, values, f'ind:{u:g}')
    raise InvalidArgumentError(f"unknown preset {name!r}")


@dataclass(frozen=True, eq=False)
class ConditioningSet:
    """N integrands g_i with targets y_i."""

    gs: tuple
    y: np.ndarray

    def __post_init__(self):
        gs = tuple(self.gs)
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if not gs:
            raise InvalidArgumentError("conditioning needs at least one function")
        if y.shape != (len(gs),):
            raise InvalidArgumentError(f"{len(gs)} functions but {y.size} targets")
        grid = gs[0].grid
        if any(not g.grid.same_as(grid) for g in gs):
            raise InvalidArgumentError("conditioning functions live on different grids")
        object.__setattr__(self, 'gs', gs)
        object.__setattr__(self, 'y', y)

    @property
    def grid(self):
        return self.gs[0].grid

    @property
    def N(self):
        return len(self.gs)

    @property
    def matrix(self):
        """(N, n + 1) array of integrand values."""
        return np.vstack([g.values for g in self.gs])

    def with_targets(self, y):
        return ConditioningSet(self.gs, y)


def _check_same_grid(f, g):
    if not f.grid.same_as(g.grid):
        raise InvalidArgumentError("integrands live on different grids")


def inner_product(f, g, model, start=0.0):
    """⟨⟨f, g⟩⟩ on [start, T].

    Martingale models accept any grid node as ``start``; fBm and generic
    models only the full interval (the remaining inner product is taken on
    the Brownian side, see :mod:`gbridge.volterra`).
    """
    _check_same_grid(f, g)
    grid = f.grid
    k = grid.index_of(start)
    if model.is_martingale:
        d_bracket = bracket_increments(model, grid)
        return float(np.sum((f.steps * g.steps * d_bracket)[k:]))
    if k != 0:
        raise UnsupportedError(
            f"remaining inner product from {start} > 0 is only defined for martingale models")
    C = increment_covariance(model, grid)
    return float(f.steps @ C @ g.steps)


def is_invertible(matrix):
    """Degeneracy floor: determinant above det_floor and condition below cond_max."""
    det = np.linalg.det(matrix)
    if not np.isfinite(det) or det <= NUMERICS_CONFIG['det_floor']:
        return False
    return np.linalg.cond(matrix) < NUMERICS_CONFIG['cond_max']


@dataclass(frozen=True, eq=False)
class GramFunction:
    """⟨⟨g⟩⟩(t_k) with determinants and inverses on the non-degenerate nodes."""

    grid: object
    matrices: np.ndarray
    dets: np.ndarray
    inverses: np.ndarray
    valid: np.ndarray

    @property
    def N(self):
        return self.matrices.shape[1]

    @property
    def initial(self):
        return self.matrices[0]

    @property
    def last_valid_index(self):
        """最后一个可逆节点的下标"""
        idx = np.flatnonzero(self.valid)
        return int(idx[-1]) if idx.size else -1

    def at(self, t):
        return self.matrices[self.grid.index_of(t)]

    def inverse_at(self, k):
        if not self.valid[k]:
            raise DegenerateConditioningError(
                f"Gram matrix is degenerate at t={self.grid.times[k]:.6g} (node {k})")
        return self.inverses[k]

    def require_valid_until(self, k):
        if k > self.last_valid_index or not np.all(self.valid[:k + 1]):
            bad = int(np.flatnonzero(~self.valid[:k + 1])[0])
            raise DegenerateConditioningError(
                f"Gram matrix is degenerate at t={self.grid.times[bad]:.6g} (node {bad}) "
                f"before t={self.grid.times[k]:.6g}")


def gram_function(cond, model):
    """Remaining Gram function ⟨⟨g⟩⟩(t) = ∫_t^T g gᵀ d⟨M⟩ for martingale models."""
    if not model.is_martingale:
        raise UnsupportedError("remaining Gram function needs a martingale model; "
                               "fBm conditioning goes through the Brownian side")
    grid = cond.grid
    return gram_from_values(grid, cond.matrix[:, :-1], bracket_increments(model, grid))


def _finish_gram(grid, matrices):
    dets = np.linalg.det(matrices)
    valid = np.array([is_invertible(m) for m in matrices])
    if not valid[0]:
        raise LinearDependenceError(
            "⟨⟨g⟩⟩(0) is singular: the conditioning functions are linearly dependent")
    inverses = np.full_like(matrices, np.nan)
    inverses[valid] = np.linalg.inv(matrices[valid])
    LOGGER.debug("Gram function: %d of %d nodes invertible", int(valid.sum()), valid.size)
    return GramFunction(grid, matrices, dets, inverses, valid)


def gram_from_values(grid, g_steps, d_measure):
    """Remaining Gram of step integrands against a deterministic measure."""
    # 从右往左累加 g g^T dμ
    cells = np.einsum('ik,jk,k->kij', g_steps, g_steps, d_measure)
    matrices = np.zeros((grid.n + 1, g_steps.shape[0], g_steps.shape[0]))
    matrices[:-1] = np.cumsum(cells[::-1], axis=0)[::-1]
    matrices = 0.5 * (matrices + np.swapaxes(matrices, 1, 2))
    return _finish_gram(grid, matrices)


def initial_gram(cond, model):
    """⟨⟨g⟩⟩(0) for any model, from the increment covariance."""
    G = cond.matrix[:, :-1]
    if model.is_martingale:
        d_bracket = bracket_increments(model, cond.grid)
        gram = (G * d_bracket) @ G.T
    else:
        gram = G @ increment_covariance(model, cond.grid) @ G.T
    gram = 0.5 * (gram + gram.T)
    if not is_invertible(gram):
        raise LinearDependenceError(
            "⟨⟨g⟩⟩(0) is singular: the conditioning functions are linearly dependent")
    return gram


def wiener_integral(f, path):
    """Σ f(t_i)(X_{i+1} - X_i)."""
    if not f.grid.same_as(path.grid):
        raise InvalidArgumentError("integrand and path live on different grids")
    return float(f.steps @ np.diff(path.values))


def wiener_integrals(cond, values):
    """All N functionals for a batch of paths: shape (..., N)."""
    values = values.values if isinstance(values, SamplePath) else np.asarray(values, dtype=float)
    return np.diff(values, axis=-1) @ cond.matrix[:, :-1].T
