"""Monte Carlo moments, standard errors and refinement sweeps.

Paths are generated in chunks of ``MC_CONFIG['chunk_size']``; chunk c draws
from stream ``seed.stream(c)``. Per-chunk raw sums are combined in stream
order, so results do not depend on how many workers ran the chunks.
"""
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import pandas as pd
from tqdm import tqdm

from config import MC_CONFIG
from gbridge.canonical import resolvent_residual
from gbridge.core import make_uniform_grid
from gbridge.errors import InvalidArgumentError
from gbridge.models import brownian_motion, covariance_matrix, fractional_brownian_motion
from gbridge.volterra import build_fractional_ops, covariance_from_kernel
from gbridge.wiener import ConditioningSet, gram_function, initial_gram, preset_function

LOGGER = logging.getLogger(__name__)

SWEEP_CHECKS = ('gram', 'resolvent', 'fbm-kernel-cov')


def worker_count():
    """Worker threads: GB_THREADS if set, else the available parallelism."""
    raw = os.environ.get(MC_CONFIG['threads_env'])
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise InvalidArgumentError(f"{MC_CONFIG['threads_env']} must be an integer, got {raw!r}")
        if value < 1:
            raise InvalidArgumentError(f"{MC_CONFIG['threads_env']} must be at least 1")
        return value
    return os.cpu_count() or 1


def chunk_sizes(paths):
    size = MC_CONFIG['chunk_size']
    full, rest = divmod(int(paths), size)
    return [size] * full + ([rest] if rest else [])


def map_streams(worker, paths, seed, progress=False):
    """Run ``worker(stream_seed, count)`` per chunk; results come back in stream order."""
    sizes = chunk_sizes(paths)
    jobs = [(seed.stream(c), size) for c, size in enumerate(sizes)]
    workers = min(worker_count(), len(jobs)) or 1
    LOGGER.debug("running %d paths in %d chunks on %d workers", paths, len(jobs), workers)
    if workers == 1:
        iterator = (worker(s, size) for s, size in jobs)
        return list(tqdm(iterator, total=len(jobs), disable=not progress, desc='streams'))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(worker, s, size) for s, size in jobs]
        return [f.result() for f in tqdm(futures, disable=not progress, desc='streams')]


def _raw_sums(x, y):
    x = x.astype(np.longdouble)
    y = y.astype(np.longdouble)
    return np.array([
        x.sum(), y.sum(), (x * y).sum(), (x * x).sum(), (y * y).sum(),
        (x * x * y).sum(), (x * y * y).sum(), (x * x * y * y).sum(),
    ])


@dataclass(frozen=True, eq=False)
class MomentReport:
    probes: list
    mean_t: np.ndarray
    mean_s: np.ndarray
    covariance: np.ndarray
    se_mean_t: np.ndarray
    se_covariance: np.ndarray
    paths: int
    seed: object

    def to_frame(self, theory=None):
        """t, s, emp_cov, theory_cov, se, z_score."""
        frame = pd.DataFrame({
            't': [p[0] for p in self.probes],
            's': [p[1] for p in self.probes],
            'emp_cov': self.covariance,
        })
        frame['theory_cov'] = np.nan if theory is None else np.asarray(theory, dtype=float)
        frame['se'] = self.se_covariance
        with np.errstate(divide='ignore', invalid='ignore'):
            frame['z_score'] = (frame['emp_cov'] - frame['theory_cov']) / frame['se']
        return frame


def estimate_moments(generator, grid, probes, paths, seed, progress=False):
    """Empirical means and covariances of ``generator(seed, count)`` at probe node pairs.

    ``generator`` returns an array (count, n + 1); ``probes`` are (t, s) grid times.
    """
    if paths < MC_CONFIG['min_paths']:
        raise InvalidArgumentError(
            f"need at least {MC_CONFIG['min_paths']} paths, got {paths}")
    index = [(grid.index_of(t), grid.index_of(s)) for t, s in probes]

    def worker(stream, count):
        values = np.asarray(generator(stream, count), dtype=float)
        return np.stack([_raw_sums(values[:, k], values[:, j]) for k, j in index])

    totals = np.zeros((len(index), 8), dtype=np.longdouble)
    for chunk in map_streams(worker, paths, seed, progress=progress):
        totals += chunk
    e = totals / paths
    a, b = e[:, 0], e[:, 1]
    cov = e[:, 2] - a * b
    var_t = np.maximum(e[:, 3] - a * a, 0)
    fourth = (e[:, 7] - 2 * b * e[:, 5] - 2 * a * e[:, 6] + b * b * e[:, 3]
              + a * a * e[:, 4] + 4 * a * b * e[:, 2] - 3 * a * a * b * b)
    se_cov = np.sqrt(np.maximum(fourth - cov * cov, 0) / paths)
    se_mean = np.sqrt(var_t * paths / max(paths - 1, 1) / paths)
    return MomentReport(list(probes), a.astype(float), b.astype(float), cov.astype(float),
                        se_mean.astype(float), se_cov.astype(float), int(paths), seed)


def estimate_mean(worker, paths, seed, progress=False):
    """Mean and standard error of a per-path statistic; ``worker(seed, count)`` returns (count,)."""
    if paths < MC_CONFIG['min_paths']:
        raise InvalidArgumentError(
            f"need at least {MC_CONFIG['min_paths']} paths, got {paths}")

    def sums(stream, count):
        x = np.asarray(worker(stream, count), dtype=np.longdouble)
        return np.array([x.sum(), (x * x).sum()])

    total = np.zeros(2, dtype=np.longdouble)
    for chunk in map_streams(sums, paths, seed, progress=progress):
        total += chunk
    mean = total[0] / paths
    var = max(total[1] / paths - mean * mean, 0) * paths / (paths - 1)
    return float(mean), float(np.sqrt(var / paths))


def _gram_residual(n, presets=('one', 'avg'), T=1.0):
    analytic = {('one', 'one'): T, ('one', 'avg'): T / 2, ('avg', 'one'): T / 2,
                ('avg', 'avg'): T / 3}
    grid = make_uniform_grid(T, n)
    cond = ConditioningSet([preset_function(p, grid) for p in presets], np.zeros(len(presets)))
    gram = initial_gram(cond, brownian_motion(T))
    exact = np.array([[analytic[(p, q)] for q in presets] for p in presets])
    return float(np.max(np.abs(gram - exact)))


def _resolvent_residual(n, presets=('one',), T=1.0, probes=((0.75, 0.25),)):
    grid = make_uniform_grid(T, n)
    model = brownian_motion(T)
    cond = ConditioningSet([preset_function(p, grid) for p in presets], np.zeros(len(presets)))
    gram = gram_function(cond, model)
    return max(abs(resolvent_residual(cond, model, t * T, s * T, gram=gram)) for t, s in probes)


def _fbm_kernel_residual(n, hurst=0.75, T=1.0):
    grid = make_uniform_grid(T, n)
    approx = covariance_from_kernel(build_fractional_ops(hurst, grid))
    exact = covariance_matrix(fractional_brownian_motion(hurst, T), grid)
    idx = [grid.last_index_before(f * T) for f in (0.25, 0.5, 1.0)]
    sub = np.ix_(idx, idx)
    return float(np.max(np.abs(approx[sub] - exact[sub]) / np.abs(exact[sub])))


def convergence_sweep(check, n_values, **params):
    """Residual of a named check per grid size, as a DataFrame (n, residual, ratio)."""
    checks = {'gram': _gram_residual, 'resolvent': _resolvent_residual,
              'fbm-kernel-cov': _fbm_kernel_residual}
    if check not in checks:
        raise InvalidArgumentError(f"unknown check {check!r}; expected one of {SWEEP_CHECKS}")
    n_values = [int(n) for n in n_values]
    if not n_values:
        raise InvalidArgumentError("n_values must not be empty")
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise InvalidArgumentError("n_values must be increasing")
    residuals = []
    for n in n_values:
        residuals.append(checks[check](n, **params))
        LOGGER.info("%s n=%d residual=%.6e", check, n, residuals[-1])
    frame = pd.DataFrame({'n': n_values, 'residual': residuals})
    with np.errstate(divide='ignore', invalid='ignore'):
        frame['ratio'] = frame['residual'].shift(1) / frame['residual']
    return frame
