import os
import sys

import click

from crnrealize.schema import SolverKind, SolveStatus

from crnrealize_cli.basecli import (
    cli,
    ensure_success,
    get_manager,
    is_json,
    is_quiet,
    load_default_config,
    load_input,
    print_report,
    problem_options,
    problem_overrides,
    read_text,
)


# ============================================================================
def format_vector(values):
    return '(' + ', '.join('{0:.6g}'.format(v) for v in values) + ')'


def print_result(result, written):
    """ Print summary of a realization run
    """
    doc = result.document
    if is_json():
        print_report(doc)
        return

    if is_quiet():
        for path in written:
            print(path)
        return

    print('Problem: {0}'.format(result.problem.describe()))
    print('Status: {0}'.format(doc.status.value))
    if result.network is None:
        if doc.status == SolveStatus.INFEASIBLE:
            print('No realization satisfies the constraints')
        else:
            print('No realization found')
    else:
        net = result.network
        print('Reactions: {0}'.format(len(net.reactions)))
        for react in net.reactions:
            print(
                '  C{0} -> C{1}    {2} -> {3} ; {4:.6g}'.format(
                    react.source + 1,
                    react.target + 1,
                    net.formula(react.source),
                    net.formula(react.target),
                    react.rate,
                )
            )
        print('c = {0}'.format(format_vector(doc.c)))
        print(
            'Deficiency: {0}, linkage classes: {1}'.format(
                doc.deficiency, len(doc.linkage_classes)
            )
        )
        print(
            'Verification: {0}'.format(
                'passed' if doc.verification and doc.verification.passed else 'failed'
            )
        )
        traj = doc.verification.trajectory if doc.verification else None
        if traj is not None:
            print(
                'Trajectory check: {0} (max deviation {1:.3g})'.format(
                    traj.status.value, traj.max_deviation
                )
            )

    for path in written:
        print('Wrote {0}'.format(path))


# ============================================================================
@cli.command(
    name='realize',
    help='Find a sparse or dense realization of a network or ODE system',
)
@problem_options
@click.option(
    '--solver',
    type=click.Choice(['embedded', 'lpfile']),
    default=None,
    help='Built-in branch-and-bound or an external solver through an LP file',
)
@click.option(
    '--solution',
    'solution_file',
    type=str,
    default=None,
    help='Values found by the external solver, "<name> <value>" per line',
)
@click.option(
    '--time-limit', type=float, default=None, help='Solver time limit in seconds'
)
@click.option(
    '--node-limit', type=int, default=None, help='Maximum branch-and-bound nodes'
)
@click.option('--seed', type=int, default=None, help='Seed of the verification samples')
@click.option(
    '--trajectory',
    is_flag=True,
    default=False,
    type=bool,
    help='Also compare integrated trajectories from x0 = 1 (advisory)',
)
@click.option(
    '--lp', is_flag=True, default=False, type=bool, help='Also write the LP file'
)
@click.option(
    '-o',
    '--out',
    type=str,
    default=None,
    help='Prefix of the written files (default: input name + "-realized")',
)
@click.argument('input_file', type=str)
def realize(
    input_file,
    solver,
    solution_file,
    time_limit,
    node_limit,
    seed,
    trajectory,
    lp,
    out,
    complexes_file,
    **problem
):
    """ Find a realization and verify it

        :param input_file: Reaction file, ODE file or JSON document
        :param solver: embedded (default) or lpfile
        :param solution_file: External solver output (lpfile solver)
        :param trajectory: Compare integrated trajectories as well
        :param lp: Write the LP file next to the other outputs
        :param out: Output prefix
        :param complexes_file: Complex list numbering the complexes
    """
    manager = get_manager()
    out = out or os.path.splitext(input_file)[0] + '-realized'

    with ensure_success():
        overrides = problem_overrides(
            solver=solver, time_limit=time_limit, node_limit=node_limit, seed=seed, **problem
        )
        config = manager.resolve(load_default_config(), **overrides)
        net = load_input(input_file, complexes_file, config)

        if config.solver == SolverKind.LPFILE and not solution_file:
            with open(out + '.lp', 'wt') as fh:
                fh.write(manager.export_model(net, config))
            if not is_quiet():
                print('Wrote {0}'.format(out + '.lp'))
                print('Solve it externally and rerun with --solution <FILE>')
            else:
                print(out + '.lp')
            return

        solution_text = read_text(solution_file) if solution_file else None
        result = manager.realize(net, config, solution_text, trajectory)
        written = manager.write_artifacts(result, out, lp=lp)

    print_result(result, written)
    if result.exit_code:
        sys.exit(result.exit_code)
