"""Covariance models, mean functions and exact Gaussian path sampling."""
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import lapack

from config import NUMERICS_CONFIG
from gbridge.core import SamplePath, TimeGrid
from gbridge.errors import InvalidArgumentError, NumericalDegeneracyError

LOGGER = logging.getLogger(__name__)

MODEL_KINDS = ('martingale', 'fbm', 'generic')


@dataclass(frozen=True, eq=False)
class CovarianceModel:
    """One of: Gaussian martingale (bracket), fBm (hurst) or generic R(t, s)."""

    kind: str
    T: float
    bracket: Optional[Callable] = None
    hurst: Optional[float] = None
    cov: Optional[Callable] = None
    name: str = ''

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise InvalidArgumentError(f"unknown model kind {self.kind!r}")
        if not np.isfinite(self.T) or self.T <= 0:
            raise InvalidArgumentError(f"horizon must be positive, got {self.T}")
        if self.kind == 'martingale' and self.bracket is None:
            raise InvalidArgumentError("martingale model needs a bracket function")
        if self.kind == 'fbm' and not (self.hurst is not None and 0 < self.hurst < 1):
            raise InvalidArgumentError(f"Hurst index must be in (0, 1), got {self.hurst}")
        if self.kind == 'generic' and self.cov is None:
            raise InvalidArgumentError("generic model needs a covariance callable")

    @property
    def is_martingale(self):
        return self.kind == 'martingale'


def brownian_motion(T=1.0):
    return CovarianceModel('martingale', float(T), bracket=_identity_bracket, name='bm')


def gaussian_martingale(bracket, T=1.0, name='martingale'):
    """Gaussian martingale with bracket ⟨M⟩; bracket must be increasing with bracket(0) = 0."""
    if bracket(0.0) != 0.0:
        raise InvalidArgumentError("bracket must vanish at 0")
    probe = np.asarray(bracket(np.linspace(0.0, T, 65)), dtype=float)
    if np.any(np.diff(probe) <= 0):
        raise InvalidArgumentError("bracket must be strictly increasing")
    return CovarianceModel('martingale', float(T), bracket=bracket, name=name)


def fractional_brownian_motion(hurst, T=1.0):
    return CovarianceModel('fbm', float(T), hurst=float(hurst), name='fbm')


def generic_model(cov, T=1.0, name='generic'):
    return CovarianceModel('generic', float(T), cov=cov, name=name)


def _identity_bracket(t):
    return t


def tabulated_bracket(values, T):
    """Piecewise-linear bracket through values given on a uniform grid of [0, T]."""
    values = np.asarray(values, dtype=float)
    nodes = np.linspace(0.0, T, values.size)

    def bracket(t):
        return np.interp(t, nodes, values)

    return bracket


def tabulated_covariance(matrix, T):
    """R(t, s) looked up in a node covariance matrix of a uniform grid on [0, T]."""
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0] - 1
    step = T / n

    def cov(t, s):
        i = np.rint(np.asarray(t) / step).astype(int)
        j = np.rint(np.asarray(s) / step).astype(int)
        if np.any(np.abs(i * step - t) > NUMERICS_CONFIG['node_tolerance'] * max(T, 1.0)) or \
                np.any(np.abs(j * step - s) > NUMERICS_CONFIG['node_tolerance'] * max(T, 1.0)):
            raise InvalidArgumentError("tabulated covariance is only defined on its own grid nodes")
        return matrix[i, j]

    return cov


def _fbm_covariance(hurst, t, s):
    two_h = 2.0 * hurst
    return 0.5 * (np.power(t, two_h) + np.power(s, two_h) - np.power(np.abs(t - s), two_h))


def _evaluate(model, t, s):
    if model.kind == 'martingale':
        return np.asarray(model.bracket(np.minimum(t, s)), dtype=float)
    if model.kind == 'fbm':
        return _fbm_covariance(model.hurst, t, s)
    return np.asarray(model.cov(t, s), dtype=float)


def covariance_at(model, t, s):
    """R(t, s) for 0 <= t, s <= T."""
    for name, value in (('t', t), ('s', s)):
        if not 0.0 <= value <= model.T * (1 + NUMERICS_CONFIG['node_tolerance']):
            raise InvalidArgumentError(f"{name}={value} outside [0, {model.T}]")
    return float(_evaluate(model, float(t), float(s)))


def covariance_matrix(model, grid):
    """Node covariance matrix [R(t_i, t_j)] on the grid (symmetrised)."""
    if grid.T > model.T * (1 + NUMERICS_CONFIG['node_tolerance']):
        raise InvalidArgumentError(f"grid horizon {grid.T} exceeds model horizon {model.T}")
    t = grid.times
    matrix = _evaluate(model, t[:, None], t[None, :])
    return 0.5 * (matrix + matrix.T)


def increment_covariance(model, grid, node_cov=None):
    """E[ΔX_i ΔX_j] for the grid increments."""
    if model.kind == 'martingale':
        return np.diag(np.diff(model.bracket(grid.times)))
    R = covariance_matrix(model, grid) if node_cov is None else node_cov
    D = np.diff(R, axis=0)
    return np.diff(D, axis=1)


def bracket_increments(model, grid):
    """Δ⟨M⟩_i on the grid; martingale models only."""
    if model.kind != 'martingale':
        raise InvalidArgumentError("bracket increments need a martingale model")
    return np.diff(np.asarray(model.bracket(grid.times), dtype=float))


@dataclass(frozen=True, eq=False)
class MeanFunction:
    """Mean m on the grid nodes, piecewise linear in between."""

    grid: TimeGrid
    values: np.ndarray = field(default=None)

    def __post_init__(self):
        values = np.zeros(self.grid.times.size) if self.values is None \
            else np.asarray(self.values, dtype=float)
        if values.shape != self.grid.times.shape:
            raise InvalidArgumentError("mean needs one value per grid node")
        object.__setattr__(self, 'values', values)

    @classmethod
    def zero(cls, grid):
        return cls(grid)

    @classmethod
    def from_uniform_values(cls, values, grid):
        """按均匀网格给出的取值线性插值到 grid 上"""
        values = np.asarray(values, dtype=float)
        nodes = np.linspace(0.0, grid.T, values.size)
        return cls(grid, np.interp(grid.times, nodes, values))

    @property
    def is_zero(self):
        return not np.any(self.values)

    def integrate(self, g_values):
        """∫ g dm as the left-point sum Σ g(t_i)(m(t_{i+1}) - m(t_i))."""
        g_values = np.asarray(g_values, dtype=float)
        return g_values[..., :-1] @ np.diff(self.values)


def cholesky_factor(cov):
    """Lower Cholesky factor with the escalating trace-scaled jitter policy."""
    size = cov.shape[0]
    scale = np.trace(cov) / size
    delta = NUMERICS_CONFIG['jitter_delta']
    minor = None
    for attempt in range(NUMERICS_CONFIG['jitter_escalations'] + 1):
        factor, info = lapack.dpotrf(cov + delta * scale * np.eye(size), lower=1, clean=1)
        if info == 0:
            if attempt:
                LOGGER.debug("Cholesky succeeded with jitter %.1e after %d escalations", delta, attempt)
            return factor
        minor = int(info)
        LOGGER.debug("Cholesky failed at leading minor %d with jitter %.1e", minor, delta)
        delta *= NUMERICS_CONFIG['jitter_factor']
    raise NumericalDegeneracyError(
        f"covariance matrix is not positive definite: leading minor {minor} failed "
        f"after {NUMERICS_CONFIG['jitter_escalations']} jitter escalations", minor=minor)


def path_factor(model, grid):
    """Cholesky factor of the node covariance without the deterministic node 0."""
    return cholesky_factor(covariance_matrix(model, grid)[1:, 1:])


def sample_paths(model, mean, grid, seed, count, factor=None):
    """Draw ``count`` paths, shape (count, n + 1), from one RNG stream."""
    if mean is None:
        mean = MeanFunction.zero(grid)
    elif not mean.grid.same_as(grid):
        raise InvalidArgumentError("mean function lives on a different grid")
    L = path_factor(model, grid) if factor is None else factor
    rng = seed.generator()
    z = rng.standard_normal((int(count), grid.n))
    paths = np.zeros((int(count), grid.n + 1))
    paths[:, 1:] = z @ L.T
    return paths + mean.values


def sample_path(model, mean, grid, seed):
    """One exact Gaussian path; node 0 carries m(0)."""
    return SamplePath(grid, sample_paths(model, mean, grid, seed, 1)[0])


def martingale_paths(model, grid, rng, count):
    """Centered martingale paths from independent Gaussian increments."""
    steps = np.sqrt(bracket_increments(model, grid))
    paths = np.zeros((int(count), grid.n + 1))
    paths[:, 1:] = np.cumsum(rng.standard_normal((int(count), grid.n)) * steps, axis=1)
    return paths
