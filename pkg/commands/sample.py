import logging

from config import DEFAULTS
from gbridge.core import SeedSpec, make_uniform_grid
from gbridge.models import sample_paths
from utils.loaders import load_model
from utils.reports import create_paths_table, write_table

LOGGER = logging.getLogger(__name__)


def add_parser(subparsers):
    parser = subparsers.add_parser('sample', help='draw exact Gaussian paths of a model')
    parser.add_argument('--model', required=True, help='model JSON file')
    parser.add_argument('--grid-n', type=int, default=None,
                        help=f"grid segments (default {DEFAULTS['grid_n']})")
    parser.add_argument('--paths', type=int, default=DEFAULTS['paths'])
    parser.add_argument('--seed', type=int, default=DEFAULTS['seed'])
    parser.add_argument('--stream', type=int, default=DEFAULTS['stream_index'])
    parser.add_argument('--out', default=None, help="CSV output (default: stdout)")
    parser.set_defaults(handler=main)
    return parser


def main(args):
    model_config = load_model(args.model)
    n = model_config.grid_n(args.grid_n, DEFAULTS['grid_n'])
    grid = make_uniform_grid(model_config.model.T, n)
    seed = SeedSpec(args.seed, args.stream)
    LOGGER.info("sampling %d paths of %s on n=%d", args.paths, model_config.model.name, n)
    values = sample_paths(model_config.model, model_config.mean(grid), grid, seed, args.paths)
    write_table(create_paths_table(grid, values), args.out)
