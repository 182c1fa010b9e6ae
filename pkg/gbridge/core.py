"""Time grids, sample paths and the seeded RNG-stream contract.

All Stieltjes integrals in the package use left-point evaluation on the grid:
``∫ f dX = Σ f(t_i) (X_{i+1} - X_i)``.
"""
import logging
from dataclasses import dataclass

import numpy as np

from config import NUMERICS_CONFIG
from gbridge.errors import InvalidArgumentError

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Discretised time axis ``0 = t_0 < ... < t_n = T``."""

    times: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.size < 2:
            raise InvalidArgumentError("a grid needs at least two nodes")
        if times[0] != 0.0:
            raise InvalidArgumentError(f"grid must start at 0, got {times[0]}")
        if np.any(np.diff(times) <= 0):
            raise InvalidArgumentError("grid times must be strictly increasing")
        times.setflags(write=False)
        object.__setattr__(self, 'times', times)

    @property
    def n(self):
        return self.times.size - 1

    @property
    def T(self):
        return float(self.times[-1])

    @property
    def steps(self):
        return np.diff(self.times)

    def index_of(self, t):
        """返回节点 t 的下标；t 不是节点时报错"""
        tol = NUMERICS_CONFIG['node_tolerance'] * max(self.T, 1.0)
        k = int(np.searchsorted(self.times, t - tol))
        if k <= self.n and abs(self.times[k] - t) <= tol:
            return k
        raise InvalidArgumentError(f"time {t} is not a grid node")

    def last_index_before(self, t):
        """Largest node index k with t_k <= t (within the node tolerance)."""
        tol = NUMERICS_CONFIG['node_tolerance'] * max(self.T, 1.0)
        return int(np.searchsorted(self.times, t + tol, side='right')) - 1

    def same_as(self, other):
        return self is other or (self.n == other.n and np.array_equal(self.times, other.times))


@dataclass(frozen=True, eq=False)
class SamplePath:
    """Process values on the nodes of a grid."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.times.shape:
            raise InvalidArgumentError(
                f"path has {values.size} values for a grid of {self.grid.times.size} nodes")
        object.__setattr__(self, 'values', values)

    def value_at(self, t):
        return float(self.values[self.grid.index_of(t)])


@dataclass(frozen=True)
class SeedSpec:
    """(master seed, stream index) naming one reproducible RNG stream."""

    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise InvalidArgumentError("master_seed must be a 64-bit unsigned integer")
        if int(self.stream_index) < 0:
            raise InvalidArgumentError("stream_index must be non-negative")

    def stream(self, offset=0):
        return SeedSpec(self.master_seed, self.stream_index + offset)

    def generator(self):
        """独立随机流：同一 (master_seed, stream_index) 总是得到同一序列"""
        seq = np.random.SeedSequence(entropy=int(self.master_seed),
                                     spawn_key=(int(self.stream_index),))
        return np.random.Generator(np.random.PCG64(seq))


def make_uniform_grid(T, n):
    """Uniform grid with ``times[i] = i * T / n``."""
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise InvalidArgumentError(f"segment count must be a positive integer, got {n}")
    if not np.isfinite(T) or T <= 0:
        raise InvalidArgumentError(f"horizon must be positive, got {T}")
    n = int(n)
    return TimeGrid(np.arange(n + 1) * (float(T) / n))


def increments(path):
    """X_{i+1} - X_i for a SamplePath (or an array of paths along the last axis)."""
    values = path.values if isinstance(path, SamplePath) else np.asarray(path, dtype=float)
    return np.diff(values, axis=-1)


def path_from_increments(grid, steps, start=0.0):
    """Cumulative-sum path starting at ``start``."""
    steps = np.asarray(steps, dtype=float)
    values = np.concatenate([[start], start + np.cumsum(steps)])
    return SamplePath(grid, values)
