import logging

import numpy as np

from config import DEFAULTS
from gbridge.canonical import canonical_transform, sde_node_count
from gbridge.core import SamplePath, SeedSpec, make_uniform_grid
from gbridge.errors import ConfigError
from gbridge.models import fractional_brownian_motion, martingale_paths, sample_paths
from gbridge.orthogonal import build_orthogonal, transform_paths
from gbridge.volterra import build_fractional_ops, volterra_bridge_transform
from gbridge.wiener import gram_function
from utils.loaders import load_conditioning, load_model
from utils.reports import create_paths_table, write_table

LOGGER = logging.getLogger(__name__)

BRIDGE_TYPES = ('orthogonal', 'canonical', 'volterra')


def add_parser(subparsers):
    parser = subparsers.add_parser('bridge', help='simulate a generalized Gaussian bridge')
    parser.add_argument('--type', dest='bridge_type', choices=BRIDGE_TYPES, default='orthogonal')
    parser.add_argument('--model', required=True, help='model JSON file')
    parser.add_argument('--cond', required=True, help='conditioning JSON file')
    parser.add_argument('--grid-n', type=int, default=None)
    parser.add_argument('--paths', type=int, default=DEFAULTS['paths'])
    parser.add_argument('--seed', type=int, default=DEFAULTS['seed'])
    parser.add_argument('--stream', type=int, default=DEFAULTS['stream_index'])
    parser.add_argument('--epsilon', type=float, default=None,
                        help='SDE stops at T - epsilon (default: one grid step)')
    parser.add_argument('--hurst', type=float, default=None, help='Hurst index for --type volterra')
    parser.add_argument('--out', default=None)
    parser.set_defaults(handler=main)
    return parser


def _centered(cond, mean):
    """中心化: 对 X - m 以 y - ∫g dm 为目标"""
    return cond.with_targets(cond.y - mean.integrate(cond.matrix))


def _log_nodes(grid, epsilon):
    k_eps = sde_node_count(grid, epsilon)
    LOGGER.info("nodes 0..%d generated by the SDE, nodes %d..%d by the orthogonal completion",
                k_eps, k_eps + 1, grid.n)


def run_orthogonal(model, mean, cond, grid, seed, count):
    bridge = build_orthogonal(cond, model, grid)
    return transform_paths(bridge, sample_paths(model, mean, grid, seed, count))


def run_canonical(model, mean, cond, grid, seed, count, epsilon):
    if not model.is_martingale:
        raise ConfigError('model.kind', "canonical bridges need a martingale model ('bm' or 'martingale')")
    centered = _centered(cond, mean)
    driving = martingale_paths(model, grid, seed.generator(), count)
    _log_nodes(grid, epsilon)
    values = canonical_transform(centered, model, driving, epsilon,
                                 gram=gram_function(centered, model))
    return values + mean.values


def run_volterra(model, mean, cond, grid, seed, count, epsilon, hurst):
    if hurst is None:
        if model.kind != 'fbm':
            raise ConfigError('hurst', "volterra bridges need --hurst or an 'fbm' model")
        hurst = model.hurst
    model = fractional_brownian_motion(hurst, grid.T)
    ops = build_fractional_ops(hurst, grid)
    centered = _centered(cond, mean)
    _log_nodes(grid, epsilon)
    paths = sample_paths(model, None, grid, seed, count)
    values = np.vstack([volterra_bridge_transform(SamplePath(grid, row), centered, ops, epsilon).values
                        for row in paths])
    return values + mean.values


def main(args):
    model_config = load_model(args.model)
    model = model_config.model
    n = model_config.grid_n(args.grid_n, DEFAULTS['grid_n'])
    grid = make_uniform_grid(model.T, n)
    cond = load_conditioning(args.cond, grid)
    mean = model_config.mean(grid)
    seed = SeedSpec(args.seed, args.stream)
    epsilon = grid.steps[-1] if args.epsilon is None else args.epsilon
    if epsilon <= 0:
        raise ConfigError('epsilon', f"must be positive, got {epsilon}")
    LOGGER.info("%s bridge: N=%d, n=%d, paths=%d", args.bridge_type, cond.N, n, args.paths)
    if args.bridge_type == 'orthogonal':
        values = run_orthogonal(model, mean, cond, grid, seed, args.paths)
    elif args.bridge_type == 'canonical':
        values = run_canonical(model, mean, cond, grid, seed, args.paths, epsilon)
    else:
        values = run_volterra(model, mean, cond, grid, seed, args.paths, epsilon, args.hurst)
    write_table(create_paths_table(grid, values), args.out)
