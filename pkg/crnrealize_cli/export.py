import click

from crnrealize.errors import CRNError
from crnrealize.network import network_to_dot, network_to_json, render_network
from crnrealize.utils import dump_json

from crnrealize_cli.basecli import (
    cli,
    ensure_success,
    get_manager,
    is_quiet,
    load_default_config,
    load_input,
    problem_options,
    problem_overrides,
)


# ============================================================================
@cli.command(
    name='export',
    help='Export a network as DOT, JSON or reaction file, or its realization '
    'problem as an LP file',
)
@click.option('--dot', 'fmt', flag_value='dot', help='DOT digraph of the network')
@click.option('--json', 'fmt', flag_value='json', help='Canonical network JSON')
@click.option('--rxn', 'fmt', flag_value='rxn', help='Reaction file')
@click.option('--lp', 'fmt', flag_value='lp', help='LP file of the realization problem')
@problem_options
@click.option(
    '-o', '--out', type=str, default=None, help='Output file (default: stdout)'
)
@click.argument('input_file', type=str)
def export(input_file, fmt, out, complexes_file, **problem):
    """ Export a network or a realization problem

        :param input_file: Reaction file, ODE file, JSON document or solution YAML
        :param fmt: dot, json, rxn or lp
        :param out: Output file, stdout when not given
        :param complexes_file: Complex list numbering the complexes
    """
    manager = get_manager()
    with ensure_success():
        if fmt is None:
            raise CRNError('choose an export format: --dot, --json, --rxn or --lp')

        config = manager.resolve(load_default_config(), **problem_overrides(**problem))
        net = load_input(input_file, complexes_file, config)

        if fmt == 'dot':
            text = network_to_dot(net)
        elif fmt == 'json':
            text = dump_json(network_to_json(net))
        elif fmt == 'rxn':
            text = render_network(net)
        else:
            text = manager.export_model(net, config)

        if out:
            with open(out, 'wt') as fh:
                fh.write(text)

    if not out:
        print(text, end='' if text.endswith('\n') else '\n')
    elif not is_quiet():
        print('Wrote {0}'.format(out))
    else:
        print(out)
