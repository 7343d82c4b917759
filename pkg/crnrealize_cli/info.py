import click
import numpy as np

from crnrealize.canonical import (
    align_complexes,
    canonical_realization,
    load_polysystem,
    render_polysystem,
)
from crnrealize.network import (
    build_Ak,
    build_Y,
    deficiency_zero_report,
    network_to_json,
    render_network,
    strong_linkage_classes,
)
from crnrealize.utils import dump_json

from crnrealize_cli.basecli import (
    cli,
    ensure_success,
    get_manager,
    is_json,
    is_quiet,
    load_input,
    print_report,
    read_text,
)


# ============================================================================
def format_matrix(mat):
    rows = [['{0:.6g}'.format(v) for v in row] for row in np.asarray(mat).tolist()]
    if not rows or not rows[0]:
        return ['  (empty)']
    width = max(len(cell) for row in rows for cell in row)
    return ['  ' + ' '.join(cell.rjust(width) for cell in row) for row in rows]


def format_classes(classes):
    return ', '.join('{' + ', '.join('C{0}'.format(v + 1) for v in cls) + '}' for cls in classes)


# ============================================================================
@cli.command(name='info', help='Show the structure of a network or ODE system')
@click.option(
    '--complexes',
    'complexes_file',
    type=str,
    default=None,
    help='File of complex formulas, numbered first in the given order',
)
@click.argument('input_file', type=str)
def info(input_file, complexes_file):
    """ Show species, complexes, matrices and structural properties

        :param input_file: Reaction file, ODE file or JSON document
        :param complexes_file: Complex list numbering the complexes
    """
    with ensure_success():
        net = load_input(input_file, complexes_file)
        Y = build_Y(net)
        A_k = build_Ak(net)
        report = deficiency_zero_report(net)
        sccs, terminal = strong_linkage_classes(net)

    if is_json():
        print_report(
            {
                'network': network_to_json(net),
                'Y': Y,
                'A_k': A_k,
                'M': Y @ A_k,
                'strong_linkage_classes': [[v + 1 for v in c] for c in sccs],
                'terminal_classes': [[v + 1 for v in c] for c in terminal],
                **report,
            }
        )
        return

    if is_quiet():
        print('weakly reversible' if report['weakly_reversible'] else 'not weakly reversible')
        return

    print('Species: {0}'.format(', '.join(net.species_names)))
    print('Complexes: {0}'.format(net.m))
    for num in range(net.m):
        print('  C{0}: {1}'.format(num + 1, net.formula(num)))
    print('Reactions: {0}'.format(len(net.reactions)))
    print('Y =')
    print('\n'.join(format_matrix(Y)))
    print('A_k =')
    print('\n'.join(format_matrix(A_k)))
    print('M = Y A_k =')
    print('\n'.join(format_matrix(Y @ A_k)))
    classes = [[v - 1 for v in cls] for cls in report['linkage_classes']]
    print('Linkage classes: {0}'.format(format_classes(classes)))
    print('Strong linkage classes: {0}'.format(format_classes(sccs)))
    print('Terminal classes: {0}'.format(format_classes(terminal)))
    print('Deficiency: {0}'.format(report['deficiency']))
    print('Weakly reversible: {0}'.format('yes' if report['weakly_reversible'] else 'no'))
    if report['witness']:
        print(
            'Reactions off every cycle: {0}'.format(
                ', '.join('C{0} -> C{1}'.format(s, t) for s, t in report['witness'])
            )
        )
    if report['deficiency_zero_theorem']:
        print('Deficiency Zero Theorem applies')


# ============================================================================
@cli.command(
    name='canonical', help='Write the canonical realization of an ODE system'
)
@click.option(
    '--json', 'as_json', is_flag=True, default=False, help='Write network JSON'
)
@click.option(
    '--complexes',
    'complexes_file',
    type=str,
    default=None,
    help='File of complex formulas, numbered first in the given order',
)
@click.option(
    '-o', '--out', type=str, default=None, help='Output file (default: stdout)'
)
@click.argument('ode_file', type=str)
def canonical(ode_file, as_json, complexes_file, out):
    """ Canonical mass-action realization of a polynomial system

        :param ode_file: ODE text file or polynomial system JSON
        :param as_json: Write network JSON instead of a reaction file
        :param complexes_file: Complex list numbering the complexes
        :param out: Output file, stdout when not given
    """
    with ensure_success():
        system = load_polysystem(read_text(ode_file))
        net = canonical_realization(system)[0]
        if complexes_file:
            order = get_manager().parse_complexes(
                read_text(complexes_file), net.species_names
            )
            net = align_complexes(net, order)[0]

        if as_json:
            text = dump_json(network_to_json(net))
        else:
            lines = render_polysystem(system).splitlines()
            text = ''.join('# ' + line + '\n' for line in lines) + render_network(net)

        if out:
            with open(out, 'wt') as fh:
                fh.write(text)

    if not out:
        print(text, end='')
    elif not is_quiet():
        print('Wrote {0} ({1} complexes, {2} reactions)'.format(out, net.m, len(net.reactions)))
    else:
        print(out)
