import sys
from contextlib import contextmanager

import click
import yaml
from pydantic import ValidationError

from crnrealize import __version__
from crnrealize.errors import EXIT_FAILURE, CRNError
from crnrealize.realize import RealizationManager
from crnrealize.schema import RealizationConfig
from crnrealize.utils import dump_json, parse_number


# ============================================================================
class Settings:
    quiet_mode = False
    report = 'text'
    config_path = None
    manager = None


settings = Settings()


# ============================================================================
@click.group()
@click.version_option(__version__, prog_name='crnrealize')
@click.option(
    '--config',
    metavar='<FILE>',
    type=str,
    envvar='CRNREALIZE_CONFIG',
    default=None,
    help='Default problem configuration, JSON or YAML (flags override it)',
)
@click.option(
    '--report',
    type=click.Choice(['text', 'json']),
    default='text',
    help='Report format printed on stdout',
)
@click.option(
    '-q',
    '--quiet',
    is_flag=True,
    default=False,
    type=bool,
    help='quiet mode: print only the written files if success',
)
def cli(config, report, quiet):
    settings.config_path = config
    settings.report = report
    settings.quiet_mode = quiet
    settings.manager = RealizationManager()


# ============================================================================
def is_quiet():
    return settings.quiet_mode


def is_json():
    return settings.report == 'json'


def get_manager():
    if settings.manager is None:
        settings.manager = RealizationManager()
    return settings.manager


# ============================================================================
def error_exit(detail, exit_code=EXIT_FAILURE):
    """ Print error (unless quiet) and exit with the given code
    """
    if not is_quiet():
        print('Error: {0}'.format(detail), file=sys.stderr)
    sys.exit(exit_code)


@contextmanager
def ensure_success():
    """ Turn toolkit, config and I/O errors into their exit codes
    """
    try:
        yield
    except CRNError as exc:
        error_exit(exc.detail, exc.exit_code)
    except ValidationError as exc:
        error_exit('invalid configuration\n{0}'.format(exc))
    except yaml.YAMLError as exc:
        error_exit('invalid YAML: {0}'.format(exc))
    except (OSError, ValueError, ZeroDivisionError) as exc:
        error_exit(exc)


# ============================================================================
def read_text(path):
    with open(path, 'rt') as fh:
        return fh.read()


def load_default_config():
    """ Config from --config / CRNREALIZE_CONFIG, or all defaults
    """
    if not settings.config_path:
        return RealizationConfig()
    return get_manager().load_config(read_text(settings.config_path))


def print_report(value):
    print(dump_json(value), end='')


# ============================================================================
def problem_options(func):
    """ Options selecting the realization problem, shared by the commands
    that build one
    """
    options = [
        click.option(
            '--sparse/--dense',
            'sparse',
            default=None,
            help='Fewest (sparse) or most (dense) reactions (overrides setting in config)',
        ),
        click.option(
            '--wr/--no-wr',
            'weakly_reversible',
            default=None,
            help='Require a weakly reversible realization (overrides setting in config)',
        ),
        click.option(
            '--conjugacy',
            type=click.Choice(['identity', 'scaling']),
            default=None,
            help='Dynamical equivalence (identity) or linear conjugacy (scaling)',
        ),
        click.option(
            '--epsilon',
            type=str,
            default=None,
            help='Smallest rate of a reaction that is on, fractions like 2/3 allowed',
        ),
        click.option(
            '--epsilon-c',
            type=str,
            default=None,
            help='Conjugacy constants are bounded by [epsilon-c, 1/epsilon-c]',
        ),
        click.option(
            '--ubound',
            type=str,
            default=None,
            help='Upper bound of every rate, or a YAML/JSON file with a bound matrix',
        ),
        click.option(
            '--complexes',
            'complexes_file',
            type=str,
            default=None,
            help='File of complex formulas, numbered first in the given order; '
            'complexes the network lacks are added',
        ),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def problem_overrides(
    sparse=None,
    weakly_reversible=None,
    conjugacy=None,
    epsilon=None,
    epsilon_c=None,
    ubound=None,
    **extra
):
    """ Flag values (None when not given) keyed like the config
    """
    manager = get_manager()
    overrides = {
        'objective': None if sparse is None else ('sparse' if sparse else 'dense'),
        'weakly_reversible': weakly_reversible,
        'conjugacy': conjugacy,
        'epsilon': parse_number(epsilon) if epsilon is not None else None,
        'epsilon_c': parse_number(epsilon_c) if epsilon_c is not None else None,
        'u': manager.load_bounds(ubound) if ubound is not None else None,
    }
    overrides.update(extra)
    return {key: val for key, val in overrides.items() if val is not None}


def load_input(input_file, complexes_file=None, config=None):
    """ Network of the input file with the complex list and the extra
    complexes of the config applied
    """
    manager = get_manager()
    net = manager.load_network(input_file, read_text(input_file))
    order = None
    if complexes_file:
        order = manager.parse_complexes(read_text(complexes_file), net.species_names)
    return manager.prepare(net, config or RealizationConfig(), order)
