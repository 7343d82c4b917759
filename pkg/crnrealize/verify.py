from __future__ import annotations

import itertools
import math
from typing import List, Optional, Sequence

import numpy as np

from .conjugacy import DEFAULT_SAMPLES, DEFAULT_SEED, apply_transform, check_target_conjugacy
from .encoder import BoundLike, DecodedRealization, RealizationProblem, SUPPORT_TOL, ZERO_TOL
from .errors import AuditError, ModelError
from .milp import MilpModel, Solution
from .network import is_weakly_reversible, mass_action, network_from_matrices
from .schema import (
    AuditReport,
    ConjugacyMode,
    CrosscheckReport,
    Objective,
    Relation,
    SolveStatus,
    Violation,
)
from .simplex import LinearProgram, solve_lp, solve_relaxation
from .utils import get_logger

__all__ = [
    'audit_solution',
    'balanced_flow',
    'brute_force_milp',
    'ensure_audit',
    'kernel_oracle',
    'kernel_vector',
    'published_realization',
    'kernel_crosscheck',
]

logger = get_logger('verify')

AUDIT_TOL = 1e-7
MAX_ENUMERATED_BINARIES = 20
RATE_RANGE = (0.1, 10.0)


# ============================================================================
def _kernel_model(A_k: np.ndarray, minimize: bool) -> MilpModel:
    A = np.asarray(A_k, dtype=float)
    m = A.shape[0]
    if A.shape != (m, m):
        raise ModelError(f'kinetics matrix must be square, got {A.shape}')

    model = MilpModel('kernel')
    ids = [model.add_variable(f'b_{j + 1}', lower=1.0) for j in range(m)]
    for i in range(m):
        model.add_constraint(
            [(ids[j], A[i, j]) for j in range(m) if A[i, j]], Relation.EQ, 0.0, f'ker_{i + 1}'
        )
    if minimize:
        model.set_objective({var: 1.0 for var in ids})
    return model


def kernel_oracle(A_k: np.ndarray) -> bool:
    """True iff A_k has a positive kernel vector, i.e. the LP
    {A_k b = 0, b >= 1} is feasible
    """
    return solve_lp(_kernel_model(A_k, minimize=False)).status == SolveStatus.OPTIMAL


def kernel_vector(A_k: np.ndarray) -> Optional[np.ndarray]:
    """A positive b with A_k b = 0, normalized to min b_j = 1, or None
    when the graph is not weakly reversible
    """
    solution = solve_lp(_kernel_model(A_k, minimize=True))
    if solution.status != SolveStatus.OPTIMAL:
        return None
    b = np.asarray(solution.values, dtype=float)
    return b / b.min() if b.size else b


def _bound_matrix(u: BoundLike, m: int) -> np.ndarray:
    u_arr = np.asarray(u, dtype=float)
    if u_arr.ndim == 0:
        u_arr = np.full((m, m), float(u_arr))
    if u_arr.shape != (m, m):
        raise ModelError(f'u has shape {u_arr.shape}, expected {(m, m)}')
    return u_arr


def balanced_flow(
    support: np.ndarray, epsilon: float, u: BoundLike
) -> Optional[np.ndarray]:
    """Finds a kinetics matrix on exactly the given support whose
    off-diagonal entries lie in [epsilon, u_ij] and whose every complex
    has inflow equal to outflow

    :return: The matrix (diagonal filled in), None when no such flow exists
    """
    support = np.asarray(support, dtype=bool)
    m = support.shape[0]
    u_arr = _bound_matrix(u, m)

    model = MilpModel('balanced-flow')
    ids = {}
    for i, j in zip(*np.nonzero(support)):
        if i == j:
            continue
        if u_arr[i, j] < epsilon:
            return None
        ids[(i, j)] = model.add_variable(
            f'w_{i + 1}_{j + 1}', lower=epsilon, upper=u_arr[i, j]
        )
    for j in range(m):
        terms = [(var, 1.0) for (i, col), var in ids.items() if col == j]
        terms += [(var, -1.0) for (row, i), var in ids.items() if row == j]
        if terms:
            model.add_constraint(terms, Relation.EQ, 0.0, f'wr_{j + 1}')

    solution = solve_lp(model)
    if solution.status != SolveStatus.OPTIMAL:
        return None
    flow = np.zeros((m, m))
    for (i, j), var in ids.items():
        flow[i, j] = solution.value(var)
    np.fill_diagonal(flow, -flow.sum(axis=0))
    return flow


# ============================================================================
def published_realization(
    problem: RealizationProblem,
    A_k_prime: np.ndarray,
    c: Sequence[float],
) -> DecodedRealization:
    """Builds the decoded form of a realization given as a conjugate
    kinetics matrix and its conjugacy vector, so it can be audited like a
    solver result. A_b = A_k' diag(Psi(c))^-1, t = 1/c; when the problem
    asks for weak reversibility a balanced flow is searched on the support.
    """
    A_prime = np.asarray(A_k_prime, dtype=float)
    c = np.asarray(c, dtype=float)
    if A_prime.shape != (problem.m, problem.m):
        raise ModelError(f'A_k\' has shape {A_prime.shape}, expected {(problem.m, problem.m)}')
    if c.shape != (problem.n,) or np.any(~(c > 0)):
        raise ModelError(f'c must be a positive vector of length {problem.n}')

    A_b = A_prime / mass_action(problem.Y, c)[None, :]
    support = A_b > SUPPORT_TOL
    np.fill_diagonal(support, False)
    np.fill_diagonal(A_b, 0.0)
    np.fill_diagonal(A_b, -A_b.sum(axis=0))

    a_tilde = None
    b = np.ones(problem.m)
    if problem.weakly_reversible:
        a_tilde = balanced_flow(support, problem.epsilon, problem.u)
        if a_tilde is not None:
            for j in range(problem.m):
                rows = np.nonzero(support[:, j])[0]
                if rows.size:
                    b[j] = a_tilde[rows[0], j] / A_b[rows[0], j]

    count = float(support.sum())
    return DecodedRealization(
        network=network_from_matrices(problem.species, problem.complexes, A_b),
        A_b=A_b,
        support=support,
        t=1.0 / c,
        c=c,
        a_tilde=a_tilde,
        b=b,
        status=SolveStatus.OPTIMAL,
        objective_value=count if problem.objective == Objective.SPARSE else -count,
        nodes=0,
    )


# ============================================================================
class _Audit:
    def __init__(self) -> None:
        self.families = {}
        self.violations: List[Violation] = []
        self.notes: List[str] = []

    def family(self, name: str) -> None:
        self.families.setdefault(name, True)

    def fail(self, family: str, index: str, residual: float, detail: str = '') -> None:
        self.families[family] = False
        self.violations.append(
            Violation(family=family, index=index, residual=float(residual), detail=detail)
        )

    def report(self) -> AuditReport:
        return AuditReport(
            passed=all(self.families.values()),
            families=self.families,
            violations=self.violations,
            notes=self.notes,
        )


def _ij(i: int, j: int) -> str:
    return f'{i + 1},{j + 1}'


def _audit_kinetics(audit: _Audit, name: str, A: np.ndarray) -> None:
    audit.family(name)
    m = A.shape[0]
    for i, j in itertools.product(range(m), repeat=2):
        if i != j and A[i, j] < -AUDIT_TOL:
            audit.fail(name, _ij(i, j), -A[i, j], 'negative off-diagonal rate')
    sums = A.sum(axis=0)
    for j in range(m):
        scale = 1.0 + abs(A[j, j])
        if abs(sums[j]) > AUDIT_TOL * scale:
            audit.fail(name, str(j + 1), sums[j], 'column sum is not zero')


def _audit_bounds(
    audit: _Audit,
    name: str,
    problem: RealizationProblem,
    A: np.ndarray,
    support: np.ndarray,
) -> None:
    audit.family(name)
    for i, j in problem.pairs():
        value = A[i, j]
        if support[i, j]:
            if value < problem.epsilon - AUDIT_TOL:
                audit.fail(name, _ij(i, j), problem.epsilon - value, 'on but below epsilon')
            if value > problem.u[i, j] + AUDIT_TOL:
                audit.fail(name, _ij(i, j), value - problem.u[i, j], 'above upper bound')
        elif abs(value) > ZERO_TOL:
            audit.fail(name, _ij(i, j), abs(value), 'off but nonzero')


def audit_solution(
    problem: RealizationProblem,
    decoded: DecodedRealization,
    sample_count: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
) -> AuditReport:
    """Re-checks a decoded realization against every constraint family by
    direct substitution, independently of the solver.

    Families: kinetics, de (or lc and t_bounds), s, support, and for weakly
    reversible problems wr, wrs and scc; finally conjugacy, the sampled
    identity Y A_k Psi(x) = T Y A_k' Psi(T^-1 x).
    """
    audit = _Audit()
    Y, M = problem.Y, problem.M
    A_b = np.asarray(decoded.A_b, dtype=float)
    support = np.asarray(decoded.support, dtype=bool)
    t = np.asarray(decoded.t, dtype=float)
    c = np.asarray(decoded.c, dtype=float)

    if A_b.shape != (problem.m, problem.m) or support.shape != A_b.shape:
        audit.fail('kinetics', '', math.inf, f'matrix shape {A_b.shape} does not fit m={problem.m}')
        return audit.report()

    _audit_kinetics(audit, 'kinetics', A_b)

    # dynamics rows
    YA = Y @ A_b
    if problem.conjugacy == ConjugacyMode.IDENTITY:
        family, target = 'de', M
        audit.family(family)
        if np.any(c != 1.0):
            audit.fail(family, '', float(np.max(np.abs(c - 1.0))), 'identity mode needs c = 1')
    else:
        family, target = 'lc', t[:, None] * M
        audit.family('t_bounds')
        for s in range(problem.n):
            if not problem.epsilon_c - AUDIT_TOL <= t[s] <= 1.0 / problem.epsilon_c + AUDIT_TOL:
                audit.fail('t_bounds', str(s + 1), t[s], 'outside [epsilon_c, 1/epsilon_c]')
            if abs(t[s] * c[s] - 1.0) > AUDIT_TOL:
                audit.fail('t_bounds', str(s + 1), t[s] * c[s] - 1.0, 't is not 1/c')
        audit.family(family)
    residual = np.abs(YA - target)
    for s, j in zip(*np.nonzero(residual > AUDIT_TOL * (1.0 + np.abs(M)))):
        audit.fail(family, _ij(s, j), residual[s, j])

    # structure
    _audit_bounds(audit, 's', problem, A_b, support)
    audit.family('support')
    if np.any(np.diag(support)):
        audit.fail('support', '', 1.0, 'diagonal marked as a reaction')
    for i, j in problem.pairs():
        on = A_b[i, j] > SUPPORT_TOL
        if on != bool(support[i, j]):
            audit.fail('support', _ij(i, j), A_b[i, j], 'binary disagrees with rate')
        if support[i, j] and problem.u[i, j] <= 0:
            audit.fail('support', _ij(i, j), A_b[i, j], 'reaction is forbidden')
    expected = {(j, i) for i, j in zip(*np.nonzero(support)) if i != j}
    if set(decoded.network.edges) != expected:
        audit.fail('support', '', 1.0, 'network reactions differ from the support')

    if not support.any():
        audit.notes.append('network has no reactions; weak reversibility holds vacuously')

    if problem.weakly_reversible:
        audit.family('wr')
        audit.family('wrs')
        if decoded.a_tilde is None:
            audit.fail('wr', '', math.inf, 'no balanced flow on the support')
        else:
            W = np.asarray(decoded.a_tilde, dtype=float)
            _audit_kinetics(audit, 'wr', W)
            off = W - np.diag(np.diag(W))
            balance = off.sum(axis=0) - off.sum(axis=1)
            for j in np.nonzero(np.abs(balance) > AUDIT_TOL * (1.0 + off.max(initial=0.0)))[0]:
                audit.fail('wr', str(j + 1), balance[j], 'outflow differs from inflow')
            _audit_bounds(audit, 'wrs', problem, W, support)

        audit.family('scc')
        wr, witness = is_weakly_reversible(decoded.network)
        if not wr:
            edges = ', '.join(f'C{src + 1}->C{dst + 1}' for src, dst in witness)
            audit.fail('scc', '', float(len(witness)), f'reactions off every cycle: {edges}')

    audit.family('conjugacy')
    if np.all(c > 0):
        conj = check_target_conjugacy(
            Y, M, apply_transform(A_b, c, Y), c, sample_count=sample_count, seed=seed
        )
        if not conj.passed:
            audit.fail(
                'conjugacy',
                '',
                max(conj.algebraic_residual, conj.max_relative_residual),
                f'first violation {conj.first_violation}',
            )
    else:
        audit.fail('conjugacy', '', math.inf, 'c is not positive')

    report = audit.report()
    if not report.passed:
        logger.debug(
            'audit failed: %s',
            ', '.join(f'{v.family}[{v.index}]' for v in report.violations[:10]),
        )
    return report


def ensure_audit(report: AuditReport) -> AuditReport:
    """Raises AuditError listing the violations of a failed audit"""
    if not report.passed:
        failed = sorted(name for name, ok in report.families.items() if not ok)
        raise AuditError(
            f'verification failed for {", ".join(failed)}', report.violations
        )
    return report


# ============================================================================
def _random_kinetics(rng: np.random.Generator, m: int) -> np.ndarray:
    density = rng.uniform(0.1, 0.6)
    mirror = rng.random() < 1.0 / 3.0
    A = np.zeros((m, m))
    for i, j in itertools.product(range(m), repeat=2):
        if i != j and rng.random() < density:
            A[i, j] = rng.uniform(*RATE_RANGE)
            if mirror:
                A[j, i] = rng.uniform(*RATE_RANGE)
    np.fill_diagonal(A, 0.0)
    np.fill_diagonal(A, -A.sum(axis=0))
    return A


def kernel_crosscheck(
    seed: int = DEFAULT_SEED, trials: int = 200, m_max: int = 6
) -> CrosscheckReport:
    """Compares the positive-kernel LP with the strongly connected
    component test on seeded random kinetics matrices

    :raises AuditError: the two tests disagree on some matrix
    """
    if trials < 1 or m_max < 1:
        raise ModelError('trials and m_max must be at least 1')

    rng = np.random.default_rng(seed)
    report = CrosscheckReport(seed=seed, trials=trials, m_max=m_max)
    for trial in range(trials):
        A = _random_kinetics(rng, int(rng.integers(1, m_max + 1)))
        by_kernel = kernel_oracle(A)
        by_graph, _ = is_weakly_reversible(A)
        if not np.any(A):
            report.empty += 1
        if by_graph:
            report.weakly_reversible += 1
        else:
            report.not_weakly_reversible += 1
        if by_kernel != by_graph:
            report.disagreements += 1
            raise AuditError(
                f'trial {trial}: kernel LP says {by_kernel}, components say {by_graph}',
                [Violation(family='crosscheck', index=str(trial), detail=str(A.tolist()))],
            )

    logger.debug(
        'crosscheck: %d weakly reversible, %d not, %d empty',
        report.weakly_reversible,
        report.not_weakly_reversible,
        report.empty,
    )
    return report


# ============================================================================
def brute_force_milp(model: MilpModel) -> Solution:
    """Solves a small model by enumerating every binary assignment and
    solving the LP over the continuous variables for each

    :raises ModelError: more than MAX_ENUMERATED_BINARIES binaries
    """
    model.freeze()
    binaries = model.binaries()
    if len(binaries) > MAX_ENUMERATED_BINARIES:
        raise ModelError(
            f'{len(binaries)} binaries are too many to enumerate '
            f'(at most {MAX_ENUMERATED_BINARIES})'
        )

    lower = np.array([var.lower for var in model.variables], dtype=float)
    upper = np.array([var.upper for var in model.variables], dtype=float)
    lp = LinearProgram(model) if model.continuous() else None

    best: Optional[np.ndarray] = None
    best_value = math.inf
    count = 0
    for assignment in itertools.product((0.0, 1.0), repeat=len(binaries)):
        count += 1
        lo, hi = lower.copy(), upper.copy()
        for var, value in zip(binaries, assignment):
            lo[var] = hi[var] = value
        if np.any(lo > hi):
            continue

        if lp is None:
            values = lo
        else:
            result = solve_relaxation(lp, *lp.bounds(lo, hi))
            if result.status == SolveStatus.UNBOUNDED:
                return Solution(SolveStatus.UNBOUNDED, nodes=count)
            if result.status != SolveStatus.OPTIMAL:
                continue
            values = result.values
        if model.check(values):
            continue
        value = model.objective_value(values)
        if value < best_value - 1e-12:
            best, best_value = np.array(values, dtype=float), value

    if best is None:
        return Solution(SolveStatus.INFEASIBLE, nodes=count)
    return Solution(SolveStatus.OPTIMAL, best, best_value, nodes=count, bound=best_value)
