import argparse
import logging
import sys

from commands import COMMANDS
from config import CLI_CONFIG
from gbridge.errors import BridgeError, ConfigError, NumericalDegeneracyError

LOGGER = logging.getLogger(__name__)


def build_parser():
    parser = argparse.ArgumentParser(
        prog=CLI_CONFIG['prog'],
        description='Generalized Gaussian bridges: sampling, bridges, checks and insider utility.')
    parser.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    parser.add_argument('-q', '--quiet', action='store_true', help='warnings and errors only')
    subparsers = parser.add_subparsers(dest='command', metavar='command')
    subparsers.required = True
    for command in COMMANDS:
        command.add_parser(subparsers)
    return parser


def configure_logging(verbose=False, quiet=False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format=CLI_CONFIG['log_format'], stream=sys.stderr, force=True)


def run(argv=None):
    """运行一个子命令并返回退出码: 0 成功, 2 配置错误, 3 数值退化"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse 对 --help 返回 0, 对错误参数返回 2
        return CLI_CONFIG['exit_ok'] if e.code in (0, None) else CLI_CONFIG['exit_config']
    configure_logging(args.verbose, args.quiet)
    try:
        args.handler(args)
    except NumericalDegeneracyError as e:
        LOGGER.error("numerical degeneracy: %s", e)
        return CLI_CONFIG['exit_numerical']
    except ConfigError as e:
        LOGGER.error("config error in %s: %s", e.field, e)
        return CLI_CONFIG['exit_config']
    except (BridgeError, OSError) as e:
        LOGGER.error("invalid input: %s", e)
        return CLI_CONFIG['exit_config']
    return CLI_CONFIG['exit_ok']


if __name__ == "__main__":
    sys.exit(run())
