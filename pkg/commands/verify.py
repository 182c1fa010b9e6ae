import logging

import numpy as np

from config import DEFAULTS
from gbridge.canonical import canonical_transform, resolvent_residual
from gbridge.core import SeedSpec, make_uniform_grid
from gbridge.errors import ConfigError
from gbridge.harness import SWEEP_CHECKS, convergence_sweep, estimate_moments
from gbridge.models import covariance_matrix, fractional_brownian_motion, martingale_paths, sample_paths
from gbridge.orthogonal import bridge_covariance, build_orthogonal, transform_paths
from gbridge.volterra import build_fractional_ops, covariance_from_kernel
from gbridge.wiener import gram_function
from utils.loaders import load_conditioning, load_model
from utils.reports import create_gram_table, create_residual_table, write_table

LOGGER = logging.getLogger(__name__)

CHECKS = ('gram', 'resolvent', 'fbm-kernel', 'bridge-cov', 'sweep')
PROBE_FRACTIONS = ((0.3, 0.6), (0.5, 0.5), (0.25, 0.75))


def add_parser(subparsers):
    parser = subparsers.add_parser('verify', help='numerical checks, emitted as CSV')
    parser.add_argument('check', choices=CHECKS)
    parser.add_argument('--model', help='model JSON file')
    parser.add_argument('--cond', help='conditioning JSON file')
    parser.add_argument('--grid-n', '--n', dest='grid_n', type=int, default=None)
    parser.add_argument('--probes', type=int, default=5, help='probe count for resolvent')
    parser.add_argument('--hurst', type=float, default=0.75)
    parser.add_argument('--type', dest='bridge_type', choices=('orthogonal', 'canonical'),
                        default='orthogonal', help='bridge representation for bridge-cov')
    parser.add_argument('--paths', type=int, default=10000)
    parser.add_argument('--seed', type=int, default=DEFAULTS['seed'])
    parser.add_argument('--epsilon', type=float, default=None)
    parser.add_argument('--sweep-check', choices=SWEEP_CHECKS, default='gram')
    parser.add_argument('--n-values', type=int, nargs='+', default=[128, 256, 512])
    parser.add_argument('--progress', action='store_true')
    parser.add_argument('--out', default=None)
    parser.set_defaults(handler=main)
    return parser


def _require(args, name):
    if getattr(args, name) is None:
        raise ConfigError(name, f"required for verify {args.check}")
    return getattr(args, name)


def _load(args):
    model_config = load_model(_require(args, 'model'))
    n = model_config.grid_n(args.grid_n, DEFAULTS['grid_n'])
    grid = make_uniform_grid(model_config.model.T, n)
    return model_config, grid, load_conditioning(_require(args, 'cond'), grid)


def verify_gram(args):
    model_config, grid, cond = _load(args)
    return create_gram_table(grid, gram_function(cond, model_config.model))


def verify_resolvent(args):
    model_config, grid, cond = _load(args)
    model = model_config.model
    gram = gram_function(cond, model)
    last = gram.last_valid_index
    rows = []
    # 探针: t 在可逆区间内等距, s = t / 3
    for k in np.unique(np.linspace(1, last, max(args.probes, 1)).round().astype(int)):
        t = grid.times[k]
        s = grid.times[k // 3]
        rows.append((t, s, resolvent_residual(cond, model, t, s, gram=gram)))
    return create_residual_table(rows, ['t', 's', 'residual'])


def verify_fbm_kernel(args):
    n = args.grid_n or 1024
    grid = make_uniform_grid(1.0, n)
    approx = covariance_from_kernel(build_fractional_ops(args.hurst, grid))
    exact = covariance_matrix(fractional_brownian_motion(args.hurst, grid.T), grid)
    idx = [grid.last_index_before(f * grid.T) for f in (0.25, 0.5, 1.0)]
    rows = []
    for a, k in enumerate(idx):
        for j in idx[a:]:
            rows.append((grid.times[k], grid.times[j], exact[k, j], approx[k, j],
                         abs(approx[k, j] - exact[k, j]) / abs(exact[k, j])))
    return create_residual_table(rows, ['t', 's', 'R_exact', 'R_from_k', 'rel_err'])


def verify_bridge_cov(args):
    model_config, grid, cond = _load(args)
    model = model_config.model
    bridge = build_orthogonal(cond, model, grid)
    probes = [(grid.times[grid.last_index_before(a * grid.T)],
               grid.times[grid.last_index_before(b * grid.T)]) for a, b in PROBE_FRACTIONS]
    if args.bridge_type == 'orthogonal':
        def generator(stream, count):
            return transform_paths(bridge, sample_paths(model, None, grid, stream, count))
    else:
        epsilon = grid.steps[-1] if args.epsilon is None else args.epsilon
        gram = gram_function(cond, model)

        def generator(stream, count):
            driving = martingale_paths(model, grid, stream.generator(), count)
            return canonical_transform(cond, model, driving, epsilon, gram=gram)

    report = estimate_moments(generator, grid, probes, args.paths, SeedSpec(args.seed),
                              progress=args.progress)
    theory = [bridge_covariance(bridge, t, s) for t, s in probes]
    return report.to_frame(theory)


def verify_sweep(args):
    params = {'hurst': args.hurst} if args.sweep_check == 'fbm-kernel-cov' else {}
    return convergence_sweep(args.sweep_check, args.n_values, **params)


def main(args):
    handlers = {
        'gram': verify_gram,
        'resolvent': verify_resolvent,
        'fbm-kernel': verify_fbm_kernel,
        'bridge-cov': verify_bridge_cov,
        'sweep': verify_sweep,
    }
    LOGGER.info("running verify %s", args.check)
    write_table(handlers[args.check](args), args.out)
