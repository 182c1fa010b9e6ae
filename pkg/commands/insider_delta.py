import logging

from config import DEFAULTS
from gbridge.core import SeedSpec
from gbridge.insider import (bs_example_delta, conditional_delta, insider_delta,
                             simulate_utility_gap)
from utils.loaders import load_market
from utils.reports import write_json

LOGGER = logging.getLogger(__name__)


def add_parser(subparsers):
    parser = subparsers.add_parser('insider-delta', help='additional log utility of an insider')
    parser.add_argument('--config', required=True, help='market JSON file')
    parser.add_argument('--grid-n', type=int, default=None)
    parser.add_argument('--mc-paths', type=int, default=DEFAULTS['mc_paths'])
    parser.add_argument('--seed', type=int, default=DEFAULTS['seed'])
    parser.add_argument('--progress', action='store_true')
    parser.add_argument('--out', default=None, help='JSON output (default: stdout)')
    parser.set_defaults(handler=main)
    return parser


def main(args):
    spec, _ = load_market(args.config, args.grid_n, DEFAULTS['grid_n'])
    gram = spec.gram()
    payload = {
        'epsilon_effective': spec.effective_epsilon,
        'delta_formula': insider_delta(spec, gram=gram),
        'delta_conditional': conditional_delta(spec, gram=gram),
    }
    if spec.mu is not None and spec.sigma is not None:
        # 与数值公式使用同一个停止时刻
        payload['delta_bs_example'] = bs_example_delta(spec.mu, spec.sigma, spec.grid.T,
                                                       spec.effective_epsilon)
    if args.mc_paths:
        seed = SeedSpec(args.seed)
        mean, se = simulate_utility_gap(spec, args.mc_paths, seed, law='enlarged',
                                        progress=args.progress, gram=gram)
        payload['delta_mc'] = mean
        payload['mc_se'] = se
        mean, se = simulate_utility_gap(spec, args.mc_paths, seed.stream(1 << 20), law='reference',
                                        progress=args.progress, gram=gram)
        payload['delta_mc_reference'] = mean
        payload['mc_reference_se'] = se
    LOGGER.info("insider delta (formula) = %.6f", payload['delta_formula'])
    write_json(payload, args.out)
