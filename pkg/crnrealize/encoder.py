from __future__ import annotations

from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DecodeError, ModelError, NumericalError
from .milp import MilpModel, Solution
from .network import Network, build_Ak, build_Y, network_from_matrices
from .schema import ConjugacyMode, Objective, Relation, SolveStatus, VarKind
from .simplex import solve_lp
from .utils import get_logger

__all__ = [
    'DecodedRealization',
    'EncodedModel',
    'RealizationProblem',
    'VarMap',
    'build_model',
    'decode',
    'encode_DE',
    'encode_LC',
    'encode_S',
    'encode_WR',
    'encode_objective',
    'prefer_unit_scaling',
]

logger = get_logger('encoder')

DEFAULT_EPSILON = 0.1
DEFAULT_UBOUND = 20.0
SUPPORT_TOL = 1e-9
ZERO_TOL = 1e-7

Pair = Tuple[int, int]
BoundLike = Union[float, Sequence[Sequence[float]], np.ndarray]


# ============================================================================
class RealizationProblem:
    """Target dynamics M = Y . A_k and the kind of realization wanted.

    ``u`` holds the off-diagonal upper bounds; an entry of 0 forbids the
    corresponding reaction.
    """

    def __init__(
        self,
        Y: np.ndarray,
        M: np.ndarray,
        objective: Objective = Objective.SPARSE,
        weakly_reversible: bool = False,
        conjugacy: ConjugacyMode = ConjugacyMode.IDENTITY,
        epsilon: float = DEFAULT_EPSILON,
        epsilon_c: Optional[float] = None,
        u: BoundLike = DEFAULT_UBOUND,
        species: Optional[Sequence[str]] = None,
    ) -> None:
        self.Y = np.asarray(Y, dtype=int)
        self.M = np.asarray(M, dtype=float)
        if self.Y.ndim != 2 or self.M.shape != self.Y.shape:
            raise ModelError(f'M has shape {self.M.shape}, Y has shape {self.Y.shape}')
        if np.any(self.Y < 0):
            raise ModelError('Y has a negative entry')
        if not np.all(np.isfinite(self.M)):
            raise ModelError('M has a non-finite entry')

        self.n, self.m = self.Y.shape
        self.objective = Objective(objective)
        self.weakly_reversible = bool(weakly_reversible)
        self.conjugacy = ConjugacyMode(conjugacy)
        self.epsilon = float(epsilon)
        self.epsilon_c = float(epsilon if epsilon_c is None else epsilon_c)

        u_arr = np.asarray(u, dtype=float)
        if u_arr.ndim == 0:
            u_arr = np.full((self.m, self.m), float(u_arr))
        if u_arr.shape != (self.m, self.m):
            raise ModelError(f'u has shape {u_arr.shape}, expected {(self.m, self.m)}')
        u_arr = u_arr.copy()
        np.fill_diagonal(u_arr, 0.0)
        if np.any(u_arr < 0) or not np.all(np.isfinite(u_arr)):
            raise ModelError('upper bounds u must be finite and nonnegative')
        self.u = u_arr

        if not self.epsilon > 0:
            raise ModelError(f'epsilon must be positive, got {self.epsilon}')
        positive = self.u[self.u > 0]
        if positive.size and not self.epsilon < positive.min():
            raise ModelError(
                f'epsilon {self.epsilon} must be below the smallest upper bound '
                f'{positive.min()}'
            )
        if not 0 < self.epsilon_c <= 1:
            raise ModelError(f'epsilon_c must lie in (0, 1], got {self.epsilon_c}')

        self.species = (
            list(species) if species is not None else [f'X{i + 1}' for i in range(self.n)]
        )
        if len(self.species) != self.n:
            raise ModelError(f'{len(self.species)} species names for {self.n} rows of Y')

    @classmethod
    def from_network(cls, net: Network, **kwargs) -> RealizationProblem:
        """Problem for the dynamics of a network. Species names default
        to the network's, explicit names must match them in number.
        """
        Y = build_Y(net)
        kwargs.setdefault('species', net.species_names)
        return cls(Y, Y @ build_Ak(net), **kwargs)

    @property
    def complexes(self) -> List[Tuple[int, ...]]:
        return [tuple(int(a) for a in self.Y[:, j]) for j in range(self.m)]

    def pairs(self) -> List[Pair]:
        """Off-diagonal (i, j) entries, column by column"""
        return [(i, j) for j in range(self.m) for i in range(self.m) if i != j]

    def describe(self) -> str:
        return (
            f'{self.objective.value} {"weakly reversible " if self.weakly_reversible else ""}'
            f'{self.conjugacy.value} realization, n={self.n} m={self.m} '
            f'epsilon={self.epsilon:g} epsilon_c={self.epsilon_c:g}'
        )


# ============================================================================
class VarMap:
    """Variable ids of A_b (a), A~_k (w), delta (d) and the diagonal of
    T^-1 (t), indexed by 0-based (row, column) pairs
    """

    def __init__(self) -> None:
        self.a: Dict[Pair, int] = {}
        self.w: Dict[Pair, int] = {}
        self.delta: Dict[Pair, int] = {}
        self.t: List[int] = []


class EncodedModel(NamedTuple):
    model: MilpModel
    var_map: VarMap
    problem: RealizationProblem


def _name(prefix: str, *idx: int) -> str:
    return prefix + ''.join(f'_{i + 1}' for i in idx)


def _rate_variables(problem: RealizationProblem, enc: EncodedModel) -> None:
    if enc.var_map.a:
        return
    for i, j in problem.pairs():
        enc.var_map.a[(i, j)] = enc.model.add_variable(_name('a', i, j))


def _kinetic_rows(problem: RealizationProblem, enc: EncodedModel, scaled: bool) -> None:
    """Rows of Y . A = M (or T^-1 M) with the diagonal of A eliminated:
    sum_{k != j} (Y_sk - Y_sj) A_kj
    """
    Y = problem.Y
    for s in range(problem.n):
        for j in range(problem.m):
            terms = [
                (enc.var_map.a[(k, j)], float(Y[s, k] - Y[s, j]))
                for k in range(problem.m)
                if k != j and Y[s, k] != Y[s, j]
            ]
            if scaled:
                if problem.M[s, j]:
                    terms.append((enc.var_map.t[s], -float(problem.M[s, j])))
                enc.model.add_constraint(terms, Relation.EQ, 0.0, _name('lc', s, j))
            else:
                enc.model.add_constraint(
                    terms, Relation.EQ, float(problem.M[s, j]), _name('de', s, j)
                )


def encode_DE(problem: RealizationProblem, enc: EncodedModel) -> None:
    """Dynamical equivalence Y . A_k = M with zero column sums"""
    if problem.conjugacy != ConjugacyMode.IDENTITY:
        raise ModelError('dynamical equivalence rows need identity conjugacy')
    _rate_variables(problem, enc)
    _kinetic_rows(problem, enc, scaled=False)


def encode_LC(problem: RealizationProblem, enc: EncodedModel) -> None:
    """Linear conjugacy Y . A_b = T^-1 . M, the diagonal t of T^-1 bounded
    by [epsilon_c, 1/epsilon_c]
    """
    if problem.conjugacy != ConjugacyMode.SCALING:
        raise ModelError('linear conjugacy rows need scaling conjugacy')
    _rate_variables(problem, enc)
    if not enc.var_map.t:
        for s in range(problem.n):
            enc.var_map.t.append(
                enc.model.add_variable(
                    _name('t', s),
                    lower=problem.epsilon_c,
                    upper=1.0 / problem.epsilon_c,
                )
            )
    _kinetic_rows(problem, enc, scaled=True)


def _structure_rows(
    problem: RealizationProblem, enc: EncodedModel, ids: Dict[Pair, int], prefix: str
) -> None:
    for (i, j), var in ids.items():
        delta = enc.var_map.delta[(i, j)]
        enc.model.add_constraint(
            [(var, 1.0), (delta, -problem.epsilon)],
            Relation.GE,
            0.0,
            _name(prefix + '_lo', i, j),
        )
        enc.model.add_constraint(
            [(var, 1.0), (delta, -float(problem.u[i, j]))],
            Relation.LE,
            0.0,
            _name(prefix + '_hi', i, j),
        )


def _support_variables(problem: RealizationProblem, enc: EncodedModel) -> None:
    if enc.var_map.delta:
        return
    for i, j in problem.pairs():
        if problem.u[i, j] > 0:
            enc.var_map.delta[(i, j)] = enc.model.add_binary(_name('d', i, j))
        else:
            enc.var_map.delta[(i, j)] = enc.model.add_variable(
                _name('d', i, j), VarKind.BINARY, 0.0, 0.0
            )


def encode_S(problem: RealizationProblem, enc: EncodedModel) -> None:
    """Binary delta_ij per off-diagonal entry: delta_ij = 0 forces the rate
    to 0, delta_ij = 1 forces it into [epsilon, u_ij]
    """
    _rate_variables(problem, enc)
    _support_variables(problem, enc)
    _structure_rows(problem, enc, enc.var_map.a, 's')


def encode_WR(problem: RealizationProblem, enc: EncodedModel) -> None:
    """Balanced flow A~_k on the same support as A_b: for every complex the
    flow leaving equals the flow entering
    """
    _support_variables(problem, enc)
    for i, j in problem.pairs():
        enc.var_map.w[(i, j)] = enc.model.add_variable(_name('w', i, j))

    for j in range(problem.m):
        terms = [(enc.var_map.w[(i, j)], 1.0) for i in range(problem.m) if i != j]
        terms += [(enc.var_map.w[(j, i)], -1.0) for i in range(problem.m) if i != j]
        enc.model.add_constraint(terms, Relation.EQ, 0.0, _name('wr', j))

    _structure_rows(problem, enc, enc.var_map.w, 'wrs')


def encode_objective(problem: RealizationProblem, enc: EncodedModel) -> None:
    """Fewest (sparse) or most (dense) reactions"""
    _support_variables(problem, enc)
    sign = 1.0 if problem.objective == Objective.SPARSE else -1.0
    enc.model.set_objective({var: sign for var in enc.var_map.delta.values()})


def build_model(problem: RealizationProblem) -> EncodedModel:
    """Encodes the whole realization problem as a MILP"""
    name = f'{problem.objective.value}-{problem.conjugacy.value}'
    if problem.weakly_reversible:
        name += '-wr'
    enc = EncodedModel(MilpModel(name), VarMap(), problem)

    if problem.conjugacy == ConjugacyMode.IDENTITY:
        encode_DE(problem, enc)
    else:
        encode_LC(problem, enc)
    encode_S(problem, enc)
    if problem.weakly_reversible:
        encode_WR(problem, enc)
    encode_objective(problem, enc)

    logger.debug('encoded %s as %r', problem.describe(), enc.model)
    return enc


def prefer_unit_scaling(
    encoded: EncodedModel, solution: Solution, time_limit: Optional[float] = None
) -> Solution:
    """Among the realizations with the solution's reaction set, picks the
    one whose conjugacy constants lie closest to 1 (least sum of |t_i - 1|).

    The reaction set, and so the objective, stays as solved; when the
    refinement fails the solution is returned unchanged.
    """
    model = encoded.model
    t_ids = encoded.var_map.t
    if not t_ids or solution.status != SolveStatus.OPTIMAL or not solution.has_values:
        return solution

    refine = MilpModel(f'{model.name}-unit-scaling')
    support = set(model.binaries())
    for var in model.variables:
        if var.id in support:
            fixed = float(round(solution.value(var.id)))
            refine.add_variable(var.name, var.kind, fixed, fixed)
        else:
            refine.add_variable(var.name, var.kind, var.lower, var.upper)
    for row in model.constraints:
        refine.add_constraint(row.terms, row.relation, row.rhs, row.name)

    deviation = []
    for num, t in enumerate(t_ids):
        dev = refine.add_variable(_name('dev', num))
        refine.add_constraint({dev: 1.0, t: -1.0}, Relation.GE, -1.0, _name('dev_lo', num))
        refine.add_constraint({dev: 1.0, t: 1.0}, Relation.GE, 1.0, _name('dev_hi', num))
        deviation.append((dev, 1.0))
    refine.set_objective(deviation)

    try:
        result = solve_lp(refine, time_limit=time_limit)
    except NumericalError as exc:
        logger.debug('unit scaling refinement failed: %s', exc)
        return solution
    if result.status != SolveStatus.OPTIMAL:
        logger.debug('unit scaling refinement ended %s', result.status.value)
        return solution

    values = result.values[: model.num_variables]
    problems = model.check(values)
    if problems:
        logger.debug('unit scaling refinement failed verification: %s', problems[0])
        return solution

    logger.debug('sum of |t_i - 1| after refinement: %.6g', result.objective_value)
    return Solution(
        solution.status,
        values,
        model.objective_value(values),
        nodes=solution.nodes,
        bound=solution.bound,
        iterations=solution.iterations + result.iterations,
    )


# ============================================================================
class DecodedRealization(NamedTuple):
    """A solved realization before the conjugacy transform"""

    network: Network
    A_b: np.ndarray
    support: np.ndarray
    t: np.ndarray
    c: np.ndarray
    a_tilde: Optional[np.ndarray]
    b: np.ndarray
    status: SolveStatus
    objective_value: Optional[float]
    nodes: int

    @property
    def num_reactions(self) -> int:
        return int(self.support.sum())

    @property
    def edges(self) -> List[Pair]:
        """(source, target) pairs of the reactions, 0-based"""
        return [(j, i) for i, j in zip(*np.nonzero(self.support))]


def _read_matrix(
    solution: Solution,
    ids: Dict[Pair, int],
    support: np.ndarray,
    problem: RealizationProblem,
    label: str,
) -> np.ndarray:
    mat = np.zeros((problem.m, problem.m))
    for (i, j), var in ids.items():
        value = solution.value(var)
        if support[i, j]:
            if value < problem.epsilon - SUPPORT_TOL:
                raise DecodeError(
                    f'{label}[{i + 1},{j + 1}] = {value!r} is below epsilon '
                    f'{problem.epsilon} although its reaction is on'
                )
            mat[i, j] = value
        elif abs(value) > ZERO_TOL:
            raise DecodeError(
                f'{label}[{i + 1},{j + 1}] = {value!r} although its reaction is off'
            )
    np.fill_diagonal(mat, 0.0)
    np.fill_diagonal(mat, -mat.sum(axis=0))
    return mat


def decode(
    solution: Solution, var_map: VarMap, problem: RealizationProblem
) -> DecodedRealization:
    """Reads the realization out of a solved model.

    Entries with delta = 0 are snapped to zero; the diagonal is rebuilt
    from the column sums. c = 1/t (exactly ones for identity conjugacy),
    b_j = A~_ij / A_ij for the first supported i of column j, else 1.

    :raises DecodeError: values inconsistent with the binaries
    """
    if not solution.has_values:
        raise DecodeError(f'no solution to decode (status {solution.status.value})')

    support = np.zeros((problem.m, problem.m), dtype=bool)
    for (i, j), var in var_map.delta.items():
        support[i, j] = solution.value(var) > 0.5

    A_b = _read_matrix(solution, var_map.a, support, problem, 'A_b')

    if problem.conjugacy == ConjugacyMode.IDENTITY:
        t = np.ones(problem.n)
        c = np.ones(problem.n)
    else:
        t = np.array([solution.value(var) for var in var_map.t])
        c = 1.0 / t

    a_tilde = None
    b = np.ones(problem.m)
    if problem.weakly_reversible:
        a_tilde = _read_matrix(solution, var_map.w, support, problem, 'A~_k')
        for j in range(problem.m):
            rows = np.nonzero(support[:, j])[0]
            if rows.size:
                b[j] = a_tilde[rows[0], j] / A_b[rows[0], j]

    network = network_from_matrices(problem.species, problem.complexes, A_b)
    return DecodedRealization(
        network=network,
        A_b=A_b,
        support=support,
        t=t,
        c=c,
        a_tilde=a_tilde,
        b=b,
        status=solution.status,
        objective_value=solution.objective_value,
        nodes=solution.nodes,
    )
