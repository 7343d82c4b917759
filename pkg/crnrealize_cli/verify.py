import sys

import click

from crnrealize.errors import EXIT_FAILURE
from crnrealize.schema import RealizationConfig

from crnrealize_cli.basecli import (
    cli,
    ensure_success,
    get_manager,
    is_json,
    is_quiet,
    load_input,
    print_report,
    problem_options,
    problem_overrides,
    read_text,
    settings,
)


# ============================================================================
def print_verification(result):
    report = result.report
    if is_json():
        print_report(report)
        return

    if is_quiet():
        print('passed' if report.passed else 'failed')
        return

    print('Problem: {0}'.format(result.problem.describe()))
    print('Reactions: {0}'.format(result.decoded.num_reactions))
    for name, passed in sorted(report.audit.families.items()):
        print('  {0: <10} {1}'.format(name, 'ok' if passed else 'FAILED'))
    for violation in report.audit.violations[:20]:
        print(
            '  {0}[{1}]: residual {2:.3g} {3}'.format(
                violation.family, violation.index, violation.residual, violation.detail
            )
        )
    if len(report.audit.violations) > 20:
        print('  ... {0} more'.format(len(report.audit.violations) - 20))
    for note in report.audit.notes:
        print('Note: {0}'.format(note))

    conj = report.conjugacy
    print(
        'Conjugacy: {0} ({1} samples, seed {2}, max relative residual {3:.3g})'.format(
            'passed' if conj.passed else 'failed',
            conj.sample_count,
            conj.seed,
            conj.max_relative_residual,
        )
    )
    if report.trajectory is not None:
        print(
            'Trajectory check: {0} (max deviation {1:.3g})'.format(
                report.trajectory.status.value, report.trajectory.max_deviation
            )
        )
    print('Verification: {0}'.format('passed' if report.passed else 'failed'))


# ============================================================================
@cli.command(name='verify', help='Verify a candidate realization of a network')
@problem_options
@click.option('--seed', type=int, default=None, help='Seed of the verification samples')
@click.option(
    '--trajectory',
    is_flag=True,
    default=False,
    type=bool,
    help='Also compare integrated trajectories from x0 = 1 (advisory)',
)
@click.argument('input_file', type=str)
@click.argument('solution_file', type=str)
def verify(input_file, solution_file, seed, trajectory, complexes_file, **problem):
    """ Audit a realization against the dynamics of the input

        :param input_file: Reaction file, ODE file or JSON document
        :param solution_file: YAML or JSON with the conjugate network and c
        :param seed: Seed of the verification samples
        :param trajectory: Compare integrated trajectories as well
        :param complexes_file: Complex list numbering the complexes
    """
    manager = get_manager()
    with ensure_success():
        data = {}
        if settings.config_path:
            data = manager.load_config(read_text(settings.config_path)).dict(
                exclude_unset=True
            )
        data.update(problem_overrides(**problem))
        config = RealizationConfig.parse_obj(data)

        net = load_input(input_file, complexes_file)
        candidate = manager.load_solution(read_text(solution_file))
        result = manager.verify(net, candidate, config, seed=seed, trajectory=trajectory)

    print_verification(result)
    if not result.report.passed:
        sys.exit(EXIT_FAILURE)
