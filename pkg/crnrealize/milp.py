from __future__ import annotations

import math
import re
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ModelError
from .schema import Relation, SolveStatus, VarKind
from .utils import parse_number

__all__ = [
    'LinearConstraint',
    'MilpModel',
    'Solution',
    'Variable',
    'export_lp_file',
    'import_solution',
    'lp_names',
]

FEASIBILITY_TOL = 1e-7
INTEGRALITY_TOL = 1e-6

Terms = Union[Mapping[int, float], Iterable[Tuple[int, float]]]


# ============================================================================
class Variable(NamedTuple):
    id: int
    name: str
    kind: VarKind
    lower: float
    upper: float

    @property
    def is_binary(self) -> bool:
        return self.kind == VarKind.BINARY


class LinearConstraint(NamedTuple):
    terms: Tuple[Tuple[int, float], ...]
    relation: Relation
    rhs: float
    name: str = ''

    def activity(self, values: np.ndarray) -> float:
        return math.fsum(coeff * float(values[var]) for var, coeff in self.terms)

    def violation(self, values: np.ndarray) -> float:
        """Amount by which the row is violated, 0 when satisfied"""
        lhs = self.activity(values)
        if self.relation == Relation.LE:
            return max(0.0, lhs - self.rhs)
        if self.relation == Relation.GE:
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


# ============================================================================
class MilpModel:
    """Mixed-integer linear program: minimize c.x over linear rows with
    continuous and binary variables.

    Mutable while being built; ``freeze`` is called by the solvers and
    rejects any further change.
    """

    def __init__(self, name: str = 'model') -> None:
        self.name = name
        self.variables: List[Variable] = []
        self.constraints: List[LinearConstraint] = []
        self.objective: Dict[int, float] = {}
        self._names: Dict[str, int] = {}
        self._frozen = False

    # building
    def _check_mutable(self) -> None:
        if self._frozen:
            raise ModelError(f'model "{self.name}" is frozen')

    def add_variable(
        self,
        name: str,
        kind: VarKind = VarKind.CONTINUOUS,
        lower: float = 0.0,
        upper: float = math.inf,
    ) -> int:
        self._check_mutable()
        if name in self._names:
            raise ModelError(f'duplicate variable name "{name}"')
        lower, upper = float(lower), float(upper)
        if math.isnan(lower) or math.isnan(upper) or lower > upper:
            raise ModelError(f'variable "{name}" has invalid bounds [{lower}, {upper}]')
        if kind == VarKind.BINARY and (lower < 0 or upper > 1):
            raise ModelError(f'binary variable "{name}" has bounds outside [0, 1]')

        var_id = len(self.variables)
        self.variables.append(Variable(var_id, name, kind, lower, upper))
        self._names[name] = var_id
        return var_id

    def add_binary(self, name: str) -> int:
        return self.add_variable(name, VarKind.BINARY, 0.0, 1.0)

    def _terms(self, terms: Terms) -> Tuple[Tuple[int, float], ...]:
        items = terms.items() if isinstance(terms, Mapping) else terms
        seen = set()
        checked = []
        for var, coeff in items:
            var = int(var)
            if not 0 <= var < len(self.variables):
                raise ModelError(f'unknown variable id {var}')
            if var in seen:
                raise ModelError(f'variable "{self.variables[var].name}" repeated in row')
            seen.add(var)
            coeff = float(coeff)
            if not math.isfinite(coeff):
                raise ModelError(f'non-finite coefficient for "{self.variables[var].name}"')
            if coeff:
                checked.append((var, coeff))
        return tuple(checked)

    def add_constraint(
        self, terms: Terms, relation: Union[Relation, str], rhs: float, name: str = ''
    ) -> int:
        self._check_mutable()
        rhs = float(rhs)
        if not math.isfinite(rhs):
            raise ModelError(f'row "{name}" has a non-finite right hand side')
        row = LinearConstraint(self._terms(terms), Relation(relation), rhs, name)
        self.constraints.append(row)
        return len(self.constraints) - 1

    def set_objective(self, terms: Terms) -> None:
        """Sets the (minimized) objective"""
        self._check_mutable()
        self.objective = dict(self._terms(terms))

    def freeze(self) -> MilpModel:
        self._frozen = True
        return self

    # queries
    @property
    def frozen(self) -> bool:
        return self._frozen

    @property
    def num_variables(self) -> int:
        return len(self.variables)

    def binaries(self) -> List[int]:
        return [var.id for var in self.variables if var.is_binary]

    def continuous(self) -> List[int]:
        return [var.id for var in self.variables if not var.is_binary]

    def var_id(self, name: str) -> int:
        try:
            return self._names[name]
        except KeyError:
            raise ModelError(f'unknown variable "{name}"')

    def objective_is_integral(self) -> bool:
        """True when every feasible objective value is an integer:
        integer coefficients on binaries only
        """
        return all(
            self.variables[var].is_binary and float(coeff).is_integer()
            for var, coeff in self.objective.items()
        )

    def objective_value(self, values: np.ndarray) -> float:
        return math.fsum(coeff * float(values[var]) for var, coeff in self.objective.items())

    def check(
        self,
        values: np.ndarray,
        tol: float = FEASIBILITY_TOL,
        integrality_tol: Optional[float] = INTEGRALITY_TOL,
    ) -> List[str]:
        """Substitutes values into every bound and row.

        :param values: One value per variable id
        :param tol: Absolute feasibility tolerance
        :param integrality_tol: Tolerance for binaries, None skips the
        integrality test (LP relaxation)
        :return: Human readable violations, empty when feasible
        """
        values = np.asarray(values, dtype=float)
        if values.shape != (len(self.variables),):
            return [f'expected {len(self.variables)} values, got {values.shape}']

        problems = []
        for var in self.variables:
            val = float(values[var.id])
            if not math.isfinite(val):
                problems.append(f'{var.name} = {val}')
                continue
            if val < var.lower - tol or val > var.upper + tol:
                problems.append(f'{var.name} = {val!r} outside [{var.lower}, {var.upper}]')
            if (
                var.is_binary
                and integrality_tol is not None
                and abs(val - round(val)) > integrality_tol
            ):
                problems.append(f'{var.name} = {val!r} is not binary')

        for num, row in enumerate(self.constraints):
            excess = row.violation(values)
            if excess > tol:
                label = row.name or f'row {num + 1}'
                problems.append(f'{label} violated by {excess:.3g}')
        return problems

    def __repr__(self) -> str:
        return (
            f'<MilpModel {self.name!r} vars={len(self.variables)} '
            f'binaries={len(self.binaries())} rows={len(self.constraints)}>'
        )


# ============================================================================
class Solution:
    """Outcome of an LP or MILP solve, values indexed by variable id"""

    __slots__ = ['status', 'values', 'objective_value', 'nodes', 'bound', 'iterations']

    def __init__(
        self,
        status: SolveStatus,
        values: Optional[np.ndarray] = None,
        objective_value: Optional[float] = None,
        nodes: int = 0,
        bound: Optional[float] = None,
        iterations: int = 0,
    ) -> None:
        self.status = status
        self.values = values
        self.objective_value = objective_value
        self.nodes = nodes
        self.bound = bound
        self.iterations = iterations

    @property
    def has_values(self) -> bool:
        return self.values is not None

    def value(self, var_id: int) -> float:
        if self.values is None:
            raise ModelError(f'no values available, solve status is {self.status.value}')
        return float(self.values[var_id])

    def __repr__(self) -> str:
        return (
            f'<Solution {self.status.value} objective={self.objective_value} '
            f'nodes={self.nodes}>'
        )


# ============================================================================
_INVALID_NAME_CHARS = re.compile(r'[^A-Za-z0-9_.]')
_LINE_WIDTH = 78


def lp_names(model: MilpModel) -> List[str]:
    """Deterministic LP-format names, one per variable id"""
    used = set()
    names = []
    for var in model.variables:
        base = _INVALID_NAME_CHARS.sub('_', var.name) or 'x'
        if base[0].isdigit() or base[0] in '.eE':
            base = '_' + base
        name = base
        suffix = 1
        while name in used:
            name = f'{base}_{suffix}'
            suffix += 1
        used.add(name)
        names.append(name)
    return names


def _number(value: float) -> str:
    if value == math.inf:
        return 'inf'
    if value == -math.inf:
        return '-inf'
    return repr(float(value))


def _linear(terms: Sequence[Tuple[int, float]], names: Sequence[str]) -> List[str]:
    if not terms:
        return ['0', names[0]] if names else ['0']
    parts = []
    for num, (var, coeff) in enumerate(terms):
        if num == 0:
            parts.append(('- ' if coeff < 0 else '') + f'{_number(abs(coeff))} {names[var]}')
        else:
            parts.append(('- ' if coeff < 0 else '+ ') + f'{_number(abs(coeff))} {names[var]}')
    return parts


def _wrap(head: str, parts: Sequence[str]) -> List[str]:
    lines = []
    line = head
    for part in parts:
        if len(line) + 1 + len(part) > _LINE_WIDTH and line.strip():
            lines.append(line)
            line = '   ' + part
        else:
            line = f'{line} {part}' if line else part
    lines.append(line)
    return lines


_RELATION_TEXT = {Relation.LE: '<=', Relation.EQ: '=', Relation.GE: '>='}


def export_lp_file(model: MilpModel) -> str:
    """Writes the model in CPLEX LP format

    :param model: The model to export
    :return: LP text with Minimize, Subject To, Bounds, Binaries sections
    """
    names = lp_names(model)
    out = [f'\\ Problem: {model.name}', 'Minimize']
    objective = sorted(model.objective.items())
    out.extend(_wrap(' obj:', _linear(objective, names)))

    out.append('Subject To')
    row_names = []
    for num, row in enumerate(model.constraints):
        label = _INVALID_NAME_CHARS.sub('_', row.name) if row.name else ''
        if not label or label in row_names or label[0].isdigit() or label[0] in '.eE':
            label = f'c{num + 1}'
        row_names.append(label)
        parts = _linear(row.terms, names)
        parts.append(f'{_RELATION_TEXT[row.relation]} {_number(row.rhs)}')
        out.extend(_wrap(f' {label}:', parts))

    out.append('Bounds')
    for var in model.variables:
        name = names[var.id]
        if var.is_binary:
            if var.lower == var.upper:
                out.append(f' {name} = {_number(var.lower)}')
            continue
        if var.lower == -math.inf and var.upper == math.inf:
            out.append(f' {name} free')
        elif var.lower == var.upper:
            out.append(f' {name} = {_number(var.lower)}')
        elif var.upper == math.inf:
            out.append(f' {name} >= {_number(var.lower)}')
        else:
            out.append(f' {_number(var.lower)} <= {name} <= {_number(var.upper)}')

    binaries = [names[var] for var in model.binaries()]
    if binaries:
        out.append('Binaries')
        out.extend(_wrap('', binaries))
    out.append('End')
    return '\n'.join(out) + '\n'


def import_solution(
    model: MilpModel, text: str, tol: float = FEASIBILITY_TOL
) -> Solution:
    """Reads an external solver's answer, ``<name> <value>`` per line.

    Names may be either the model's or the LP-file's sanitized names.
    Lines starting with ``#`` are skipped and unlisted variables are 0.

    :raises ModelError: unknown variable, bad number, or infeasible values
    """
    lookup = {name: num for num, name in enumerate(lp_names(model))}
    lookup.update({var.name: var.id for var in model.variables})
    values = np.zeros(len(model.variables))

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith('#'):
            continue
        fields = line.replace('=', ' ').split()
        if len(fields) != 2:
            raise ModelError(f'line {lineno}: expected "<name> <value>", got "{line}"')
        name, value = fields
        if name not in lookup:
            raise ModelError(f'line {lineno}: unknown variable "{name}"')
        try:
            values[lookup[name]] = parse_number(value)
        except (ValueError, ZeroDivisionError):
            raise ModelError(f'line {lineno}: invalid value "{value}"')

    problems = model.check(values, tol=tol)
    if problems:
        raise ModelError(
            f'imported solution is infeasible: {"; ".join(problems[:5])}'
            + (f' (and {len(problems) - 5} more)' if len(problems) > 5 else '')
        )
    return Solution(SolveStatus.OPTIMAL, values, model.objective_value(values))
