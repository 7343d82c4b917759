from __future__ import annotations

import math
import time
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import ModelError, NumericalError
from .milp import FEASIBILITY_TOL, MilpModel, Solution
from .schema import Relation, SolveStatus
from .utils import get_logger

__all__ = ['LinearProgram', 'LpResult', 'WarmStart', 'solve_lp', 'solve_relaxation']

logger = get_logger('simplex')

PIVOT_TOL = 1e-9
OPTIMALITY_TOL = 1e-9
HARRIS_TOL = 1e-9
ITERATION_FACTOR = 200

# pivots with a step below DEGENERATE_STEP count as degenerate
DEGENERATE_STEP = 1e-12
DEGENERATE_RUN = 50

CHECK_EVERY = 50
REFACTOR_EVERY = 1000
DRIFT_TOL = 1e-8
GROWTH_LIMIT = 1e12
REPAIR_TOL = 1e-9
MAX_RESTORES = 5


# ============================================================================
class WarmStart(NamedTuple):
    """Final basis of a solve, reusable after bound changes"""

    basis: np.ndarray
    at_upper: np.ndarray
    artificials: Tuple[Tuple[int, float], ...]


class LpResult(NamedTuple):
    status: SolveStatus
    values: Optional[np.ndarray]
    objective: Optional[float]
    warm: Optional[WarmStart]
    iterations: int


# ============================================================================
class LinearProgram:
    """Column form of a model: minimize c.z subject to A z = b and
    lower <= z <= upper.

    Every model variable maps to one column (negated when only its upper
    bound is finite) or to a pair of columns (free variables). Every row
    gets a slack column whose bounds encode the row's relation.
    """

    def __init__(self, model: MilpModel) -> None:
        self.model = model
        self.num_rows = len(model.constraints)

        self.columns: List[Tuple[int, float]] = []
        self.var_columns: List[List[int]] = []
        lower: List[float] = []
        upper: List[float] = []
        for var in model.variables:
            cols = []
            if var.lower > -math.inf:
                cols.append(self._column(var.id, 1.0))
                lower.append(var.lower)
                upper.append(var.upper)
            elif var.upper < math.inf:
                cols.append(self._column(var.id, -1.0))
                lower.append(-var.upper)
                upper.append(math.inf)
            else:
                cols.append(self._column(var.id, 1.0))
                cols.append(self._column(var.id, -1.0))
                lower.extend([0.0, 0.0])
                upper.extend([math.inf, math.inf])
            self.var_columns.append(cols)

        self.num_struct = len(self.columns)
        self.num_cols = self.num_struct + self.num_rows

        self.A = np.zeros((self.num_rows, self.num_cols))
        self.b = np.zeros(self.num_rows)
        for num, row in enumerate(model.constraints):
            for var, coeff in row.terms:
                for col in self.var_columns[var]:
                    self.A[num, col] = coeff * self.columns[col][1]
            self.A[num, self.num_struct + num] = 1.0
            self.b[num] = row.rhs
            if row.relation == Relation.LE:
                lower.append(0.0)
                upper.append(math.inf)
            elif row.relation == Relation.GE:
                lower.append(-math.inf)
                upper.append(0.0)
            else:
                lower.append(0.0)
                upper.append(0.0)

        self.lower = np.array(lower, dtype=float)
        self.upper = np.array(upper, dtype=float)

        self.c = np.zeros(self.num_cols)
        for var, coeff in model.objective.items():
            for col in self.var_columns[var]:
                self.c[col] = coeff * self.columns[col][1]

    def _column(self, var_id: int, sign: float) -> int:
        self.columns.append((var_id, sign))
        return len(self.columns) - 1

    def bounds(
        self,
        var_lower: Optional[np.ndarray] = None,
        var_upper: Optional[np.ndarray] = None,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Column bounds for the given variable bounds (default: the model's)"""
        lower = self.lower.copy()
        upper = self.upper.copy()
        if var_lower is None and var_upper is None:
            return lower, upper

        for var in self.model.variables:
            lo = var.lower if var_lower is None else float(var_lower[var.id])
            hi = var.upper if var_upper is None else float(var_upper[var.id])
            if (lo, hi) == (var.lower, var.upper):
                continue
            cols = self.var_columns[var.id]
            if len(cols) != 1:
                raise ModelError(f'cannot bound free variable "{var.name}"')
            col = cols[0]
            if self.columns[col][1] > 0:
                lower[col], upper[col] = lo, hi
            else:
                lower[col], upper[col] = -hi, -lo
        return lower, upper

    def to_values(self, z: np.ndarray) -> np.ndarray:
        values = np.zeros(len(self.model.variables))
        for col, (var, sign) in enumerate(self.columns):
            values[var] += sign * z[col]
        return values


# ============================================================================
class _Deadline(Exception):
    def __init__(self, iterations: int) -> None:
        super().__init__('simplex deadline passed')
        self.iterations = iterations


class _Tableau:
    """Dense bounded-variable simplex tableau T = B^-1 [A | artificials].

    T is updated by pivoting, checked against A x = b every few pivots
    and rebuilt from scratch when it drifts. A singular basis is repaired
    by swapping its dependent columns for slacks; basic values the repair
    pushes outside their bounds get temporarily widened bounds
    (``saved``) until ``optimize`` restores them.
    """

    def __init__(
        self,
        lp: LinearProgram,
        lower: np.ndarray,
        upper: np.ndarray,
        artificials: Sequence[Tuple[int, float]],
        deadline: Optional[float] = None,
        careful: bool = False,
    ) -> None:
        self.lp = lp
        self.m = lp.num_rows
        self.first_art = lp.num_cols
        self.artificials = tuple(artificials)
        self.deadline = deadline

        art = np.zeros((self.m, len(self.artificials)))
        for num, (row, sign) in enumerate(self.artificials):
            art[row, num] = sign
        self.A = np.hstack([lp.A, art])
        self.ncols = self.A.shape[1]

        self.lower = np.concatenate([lower, np.zeros(len(self.artificials))])
        self.upper = np.concatenate([upper, np.full(len(self.artificials), math.inf)])
        self.saved: Dict[int, Tuple[float, float]] = {}

        self.x = np.zeros(self.ncols)
        self.basis = np.zeros(self.m, dtype=int)
        self.is_basic = np.zeros(self.ncols, dtype=bool)
        self.at_upper = np.zeros(self.ncols, dtype=bool)
        self.T = np.zeros((self.m, self.ncols))
        self.d = np.zeros(self.ncols)
        self.cost = np.zeros(self.ncols)
        self.iterations = 0

        if careful:
            self.degenerate_run, self.check_every, self.refactor_every = 5, 1, 25
        else:
            self.degenerate_run = DEGENERATE_RUN
            self.check_every = CHECK_EVERY
            self.refactor_every = REFACTOR_EVERY
        self.degenerate = 0
        self.since_refactor = 0

    # ------------------------------------------------------------------------
    def set_basis(self, basis: np.ndarray) -> None:
        self.basis = np.array(basis, dtype=int)
        self.is_basic[:] = False
        self.is_basic[self.basis] = True

    def place_nonbasic(self) -> None:
        """Puts every nonbasic column on the bound its flag names"""
        for col in np.where(~self.is_basic)[0]:
            lo, hi = self.lower[col], self.upper[col]
            if self.at_upper[col] and hi < math.inf:
                self.x[col] = hi
            elif lo > -math.inf:
                self.x[col] = lo
                self.at_upper[col] = False
            else:
                self.x[col] = hi
                self.at_upper[col] = True

    def _factor(self) -> None:
        B = self.A[:, self.basis]
        nonbasic = self.x.copy()
        nonbasic[self.basis] = 0.0
        rhs = self.lp.b - self.A @ nonbasic
        try:
            solved = np.linalg.solve(B, np.column_stack([self.A, rhs]))
        except np.linalg.LinAlgError:
            raise NumericalError('singular basis matrix')
        if not np.all(np.isfinite(solved)) or np.abs(solved[:, :-1]).max() > GROWTH_LIMIT:
            raise NumericalError('basis matrix is numerically singular')
        self.T = solved[:, :-1]
        self.x[self.basis] = solved[:, -1]

    def refactor(self, cost: np.ndarray) -> None:
        """Recomputes T, basic values and reduced costs from scratch,
        repairing the basis when it is singular
        """
        self.cost = cost
        self.since_refactor = 0
        if not self.m:
            self.d = cost.copy()
            return
        try:
            self._factor()
        except NumericalError as exc:
            logger.debug('%s, repairing the basis', exc)
            self.repair()
            self._factor()
            self._shift_bounds()
        self.d = cost - cost[self.basis] @ self.T

    def repair(self) -> None:
        """Replaces linearly dependent basic columns by slack columns.

        :raises NumericalError: no slack completes the basis
        """
        Q = np.zeros((self.m, self.m))
        rank = 0

        def independent(vec: np.ndarray) -> bool:
            nonlocal rank
            resid = vec.copy()
            for _ in range(2):
                resid -= Q[:, :rank] @ (Q[:, :rank].T @ resid)
            norm = float(np.linalg.norm(resid))
            if norm <= REPAIR_TOL * max(1.0, float(np.linalg.norm(vec))):
                return False
            Q[:, rank] = resid / norm
            rank += 1
            return True

        dropped = [r for r, col in enumerate(self.basis) if not independent(self.A[:, col])]
        basis = self.basis.copy()
        slacks = (self.lp.num_struct + row for row in range(self.m))
        for r in dropped:
            for col in slacks:
                if not self.is_basic[col] and independent(self.A[:, col]):
                    basis[r] = col
                    break
            else:
                raise NumericalError('basis repair ran out of slack columns')

        for r in dropped:
            col = self.basis[r]
            lo, hi = self.lower[col], self.upper[col]
            val = self.x[col]
            upper = hi < math.inf and (lo == -math.inf or abs(val - hi) < abs(val - lo))
            self.at_upper[col] = upper
            self.x[col] = hi if upper else lo
        logger.debug('replaced %d dependent basic columns by slacks', len(dropped))
        self.set_basis(basis)

    def _shift_bounds(self) -> None:
        xb = self.x[self.basis]
        out = (xb < self.lower[self.basis] - FEASIBILITY_TOL) | (
            xb > self.upper[self.basis] + FEASIBILITY_TOL
        )
        for r in np.where(out)[0]:
            col = self.basis[r]
            self.saved.setdefault(col, (self.lower[col], self.upper[col]))
            self.lower[col] = min(self.lower[col], xb[r])
            self.upper[col] = max(self.upper[col], xb[r])

    def restore_bounds(self) -> bool:
        if not self.saved:
            return False
        for col, (lo, hi) in self.saved.items():
            self.lower[col], self.upper[col] = lo, hi
        self.saved.clear()
        self.place_nonbasic()
        return True

    def infeasibility(self) -> float:
        if not self.m:
            return 0.0
        xb = self.x[self.basis]
        return float(
            np.maximum(self.lower[self.basis] - xb, xb - self.upper[self.basis]).max()
        )

    def residual(self) -> float:
        return float(np.abs(self.A @ self.x - self.lp.b).max(initial=0.0)) / (
            1.0 + float(np.abs(self.lp.b).max(initial=0.0))
        )

    def pivot(self, r: int, j: int) -> None:
        piv = self.T[r, j]
        if abs(piv) < PIVOT_TOL:
            raise NumericalError(f'pivot element {piv:.3g} below tolerance')
        self.T[r] /= piv
        col = self.T[:, j].copy()
        col[r] = 0.0
        self.T -= np.outer(col, self.T[r])
        self.d -= self.d[j] * self.T[r]
        self.d[j] = 0.0

        leaving = self.basis[r]
        self.is_basic[leaving] = False
        self.is_basic[j] = True
        self.at_upper[j] = False
        self.basis[r] = j

    def _tick(self) -> None:
        self.iterations += 1
        if self.deadline is not None and time.monotonic() >= self.deadline:
            raise _Deadline(self.iterations)

    def _after_pivot(self) -> None:
        self.since_refactor += 1
        if self.since_refactor >= self.refactor_every:
            self.refactor(self.cost)
        elif self.since_refactor % self.check_every == 0 and self.residual() > DRIFT_TOL:
            logger.debug('tableau drifted after %d pivots, refactoring', self.since_refactor)
            self.refactor(self.cost)

    # ------------------------------------------------------------------------
    def _price(self, bland: bool) -> Tuple[int, float]:
        movable = ~self.is_basic & (self.upper > self.lower)
        up = movable & ~self.at_upper & (self.d < -OPTIMALITY_TOL)
        down = movable & self.at_upper & (self.d > OPTIMALITY_TOL)
        eligible = up | down
        if not eligible.any():
            return -1, 0.0
        if bland:
            j = int(np.argmax(eligible))
        else:
            j = int(np.argmax(np.where(eligible, np.abs(self.d), -1.0)))
        return j, (1.0 if up[j] else -1.0)

    def _ratio(self, col: np.ndarray, bland: bool) -> Tuple[float, int]:
        """Two pass ratio test: the step allowed when every basic value may
        overshoot its bound by HARRIS_TOL, then the largest pivot among the
        rows blocking within it. Bland's rule takes the first blocking row
        by column index instead.
        """
        if not self.m:
            return math.inf, -1
        xb = self.x[self.basis]
        lb = self.lower[self.basis]
        ub = self.upper[self.basis]
        exact = np.full(self.m, math.inf)
        relaxed = np.full(self.m, math.inf)
        dec = col > PIVOT_TOL
        inc = col < -PIVOT_TOL
        with np.errstate(invalid='ignore'):
            exact[dec] = (xb[dec] - lb[dec]) / col[dec]
            relaxed[dec] = (xb[dec] - lb[dec] + HARRIS_TOL) / col[dec]
            exact[inc] = (ub[inc] - xb[inc]) / -col[inc]
            relaxed[inc] = (ub[inc] - xb[inc] + HARRIS_TOL) / -col[inc]
        exact = np.where(np.isnan(exact), math.inf, exact)
        relaxed = np.where(np.isnan(relaxed), math.inf, relaxed)

        if relaxed.min() == math.inf:
            return math.inf, -1
        if bland:
            least = exact.min()
            ties = np.where(exact <= least + 1e-12)[0]
            r = int(ties[np.argmin(self.basis[ties])])
        else:
            limit = max(float(relaxed.min()), 0.0)
            rows = np.where(exact <= limit)[0]
            r = int(rows[np.argmax(np.abs(col[rows]))])
        return max(float(exact[r]), 0.0), r

    def primal(self, cost: np.ndarray, max_iter: int) -> SolveStatus:
        """Primal simplex from a primal feasible basis. Bland's rule takes
        over after a run of degenerate pivots and lets go on progress.
        """
        self.cost = cost
        self.d = cost - cost[self.basis] @ self.T
        self.degenerate = 0
        steps = 0
        while True:
            bland = self.degenerate >= self.degenerate_run
            j, direction = self._price(bland)
            if j < 0:
                return SolveStatus.OPTIMAL
            if steps >= max_iter:
                raise NumericalError(f'simplex iteration limit {max_iter} reached')
            steps += 1
            self._tick()

            col = direction * self.T[:, j]
            theta, r = self._ratio(col, bland)
            span = self.upper[j] - self.lower[j]

            if span <= theta and span < math.inf:
                self.x[self.basis] -= span * col
                self.at_upper[j] = direction > 0
                self.x[j] = self.upper[j] if direction > 0 else self.lower[j]
                self.degenerate = 0
                continue

            if r < 0:
                return SolveStatus.UNBOUNDED

            self.x[self.basis] -= theta * col
            self.x[j] += direction * theta
            leaving = self.basis[r]
            if col[r] > 0:
                self.x[leaving] = self.lower[leaving]
                self.at_upper[leaving] = False
            else:
                self.x[leaving] = self.upper[leaving]
                self.at_upper[leaving] = True
            self.degenerate = self.degenerate + 1 if theta <= DEGENERATE_STEP else 0
            self.pivot(r, j)
            self._after_pivot()

    def dual(self, max_iter: int) -> bool:
        """Bounded dual simplex restoring primal feasibility.

        :return: False when a row proves the bounds infeasible
        """
        for _ in range(max_iter):
            xb = self.x[self.basis]
            below = self.lower[self.basis] - xb
            above = xb - self.upper[self.basis]
            infeasibility = np.maximum(below, above)
            r = int(np.argmax(infeasibility)) if self.m else 0
            if not self.m or infeasibility[r] <= FEASIBILITY_TOL:
                return True

            self._tick()
            row = self.T[r]
            to_lower = below[r] > 0
            movable = ~self.is_basic & (self.upper > self.lower)
            if to_lower:
                eligible = movable & (
                    (~self.at_upper & (row < -PIVOT_TOL)) | (self.at_upper & (row > PIVOT_TOL))
                )
            else:
                eligible = movable & (
                    (~self.at_upper & (row > PIVOT_TOL)) | (self.at_upper & (row < -PIVOT_TOL))
                )
            if not eligible.any():
                return False

            candidates = np.where(eligible)[0]
            ratios = np.abs(self.d[candidates]) / np.abs(row[candidates])
            j = int(candidates[np.argmin(ratios)])

            leaving = self.basis[r]
            bound = self.lower[leaving] if to_lower else self.upper[leaving]
            theta = (xb[r] - bound) / row[j]
            self.x[self.basis] -= theta * self.T[:, j]
            self.x[j] += theta
            self.x[leaving] = bound
            self.at_upper[leaving] = not to_lower
            self.pivot(r, j)
            self._after_pivot()

        raise NumericalError(f'dual simplex iteration limit {max_iter} reached')

    def optimize(self, cost: np.ndarray, max_iter: int) -> SolveStatus:
        """Primal simplex to optimality, then a fresh factorization. Bounds
        widened by a basis repair are restored and the dual simplex brings
        the basis back to feasibility before the next primal pass.
        """
        for _ in range(MAX_RESTORES + 1):
            status = self.primal(cost, max_iter)
            restored = self.restore_bounds()
            self.refactor(cost)
            if status == SolveStatus.UNBOUNDED and not restored:
                return status
            if not self.saved and self.infeasibility() <= FEASIBILITY_TOL:
                if status == SolveStatus.OPTIMAL and self._price(bland=False)[0] < 0:
                    return status
                continue
            self.restore_bounds()
            self.refactor(cost)
            if not self.dual(max_iter):
                return SolveStatus.INFEASIBLE
        raise NumericalError('simplex did not settle after repeated basis repairs')

    def drive_out_artificials(self) -> None:
        """Replaces basic artificials by structural or slack columns where
        the row allows it. Artificials left basic sit on redundant rows.
        """
        for r in range(self.m):
            if self.basis[r] < self.first_art:
                continue
            row = np.abs(self.T[r, : self.first_art])
            row[self.is_basic[: self.first_art]] = 0.0
            j = int(np.argmax(row)) if row.size else 0
            if row.size and row[j] > 1e-7:
                self.x[self.basis[r]] = 0.0
                self.pivot(r, j)
        self.upper[self.first_art :] = 0.0
        self.at_upper[self.first_art :] = False
        self.x[self.first_art :][~self.is_basic[self.first_art :]] = 0.0

    def warm_state(self) -> WarmStart:
        return WarmStart(self.basis.copy(), self.at_upper.copy(), self.artificials)


# ============================================================================
def _cost(lp: LinearProgram, tab: _Tableau) -> np.ndarray:
    return np.concatenate([lp.c, np.zeros(tab.ncols - lp.num_cols)])


def _max_iter(lp: LinearProgram) -> int:
    return ITERATION_FACTOR * (lp.num_rows + lp.num_cols) + 1000


def _finish(lp: LinearProgram, tab: _Tableau, status: SolveStatus) -> LpResult:
    if status != SolveStatus.OPTIMAL:
        return LpResult(status, None, None, None, tab.iterations)
    z = np.clip(tab.x[: lp.num_cols], tab.lower[: lp.num_cols], tab.upper[: lp.num_cols])
    values = lp.to_values(z)
    objective = lp.model.objective_value(values)
    return LpResult(status, values, objective, tab.warm_state(), tab.iterations)


def _cold(
    lp: LinearProgram,
    lower: np.ndarray,
    upper: np.ndarray,
    deadline: Optional[float] = None,
    careful: bool = False,
) -> LpResult:
    ns = lp.num_struct
    if np.any(lower > upper):
        return LpResult(SolveStatus.INFEASIBLE, None, None, None, 0)

    x_struct = np.where(np.isfinite(lower[:ns]), lower[:ns], upper[:ns])
    residual = lp.b - lp.A[:, :ns] @ x_struct

    artificials = []
    slack_values = np.zeros(lp.num_rows)
    for row in range(lp.num_rows):
        col = ns + row
        lo, hi = lower[col], upper[col]
        res = residual[row]
        if lo - 1e-12 <= res <= hi + 1e-12:
            slack_values[row] = res
            continue
        bound = lo if res < lo else hi
        slack_values[row] = bound
        artificials.append((row, 1.0 if res - bound > 0 else -1.0))

    tab = _Tableau(lp, lower, upper, artificials, deadline, careful)
    tab.x[:ns] = x_struct
    tab.at_upper[:ns] = ~np.isfinite(lower[:ns])

    art_row = {row: num for num, (row, _) in enumerate(artificials)}
    basis = np.zeros(lp.num_rows, dtype=int)
    signs = np.ones(lp.num_rows)
    for row in range(lp.num_rows):
        col = ns + row
        if row in art_row:
            art_col = tab.first_art + art_row[row]
            sign = artificials[art_row[row]][1]
            basis[row] = art_col
            signs[row] = sign
            tab.x[col] = slack_values[row]
            tab.at_upper[col] = slack_values[row] == upper[col]
            tab.x[art_col] = abs(residual[row] - slack_values[row])
        else:
            basis[row] = col
            tab.x[col] = slack_values[row]
    tab.set_basis(basis)
    tab.T = tab.A * signs[:, None]

    max_iter = _max_iter(lp)
    if artificials:
        phase1 = np.zeros(tab.ncols)
        phase1[tab.first_art :] = 1.0
        status = tab.optimize(phase1, max_iter)
        infeasibility = float(tab.x[tab.first_art :].sum())
        if status != SolveStatus.OPTIMAL or infeasibility > FEASIBILITY_TOL:
            logger.debug('phase 1 ended with infeasibility %.3g', infeasibility)
            return LpResult(SolveStatus.INFEASIBLE, None, None, None, tab.iterations)
        tab.drive_out_artificials()

    cost = _cost(lp, tab)
    tab.refactor(cost)
    return _finish(lp, tab, tab.optimize(cost, max_iter))


def _warm(
    lp: LinearProgram,
    lower: np.ndarray,
    upper: np.ndarray,
    warm: WarmStart,
    deadline: Optional[float] = None,
    careful: bool = False,
) -> LpResult:
    tab = _Tableau(lp, lower, upper, warm.artificials, deadline, careful)
    tab.upper[tab.first_art :] = 0.0
    tab.set_basis(warm.basis)
    tab.at_upper[:] = warm.at_upper
    tab.place_nonbasic()

    cost = _cost(lp, tab)
    tab.refactor(cost)
    max_iter = _max_iter(lp)
    if not tab.dual(max_iter):
        return LpResult(SolveStatus.INFEASIBLE, None, None, None, tab.iterations)
    return _finish(lp, tab, tab.optimize(cost, max_iter))


def solve_relaxation(
    lp: LinearProgram,
    lower: Optional[np.ndarray] = None,
    upper: Optional[np.ndarray] = None,
    warm: Optional[WarmStart] = None,
    deadline: Optional[float] = None,
    careful: bool = False,
) -> LpResult:
    """Solves the LP relaxation under column bounds, starting from a
    previous basis when one is given.

    A warm start that breaks down falls back to a cold start, and a cold
    start that breaks down is repeated with careful pivoting (frequent
    refactorization, early Bland's rule).

    :param deadline: ``time.monotonic()`` value after which the solve
    stops with status time-limit
    :param careful: Start in careful pivoting right away
    """
    if lower is None or upper is None:
        lower, upper = lp.bounds()
    if np.any(lower > upper + 1e-12):
        return LpResult(SolveStatus.INFEASIBLE, None, None, None, 0)

    try:
        if warm is not None:
            try:
                return _warm(lp, lower, upper, warm, deadline, careful)
            except NumericalError as exc:
                logger.debug('warm start failed (%s), solving from scratch', exc)
        try:
            return _cold(lp, lower, upper, deadline, careful)
        except NumericalError as exc:
            if careful:
                raise
            logger.debug('cold start failed (%s), retrying with careful pivoting', exc)
            return _cold(lp, lower, upper, deadline, careful=True)
    except _Deadline as exc:
        return LpResult(SolveStatus.TIME_LIMIT, None, None, None, exc.iterations)


def solve_lp(
    model: MilpModel,
    lp: Optional[LinearProgram] = None,
    time_limit: Optional[float] = None,
) -> Solution:
    """Solves the LP relaxation of a model (binaries range over [0, 1]).

    The result is checked by substituting it into every row; a result
    failing the check is solved again with careful pivoting, and a
    second failure is reported as a NumericalError.

    :param model: The model, frozen by this call
    :param lp: A prepared column form of the model, built when omitted
    :param time_limit: Wall clock limit in seconds
    :return: The solution with status optimal, infeasible, unbounded or
    time-limit
    """
    model.freeze()
    lp = lp or LinearProgram(model)
    deadline = None if time_limit is None else time.monotonic() + time_limit
    result = solve_relaxation(lp, deadline=deadline)
    if result.status == SolveStatus.OPTIMAL and model.check(result.values, integrality_tol=None):
        logger.debug('LP solution failed verification, solving with careful pivoting')
        result = solve_relaxation(lp, deadline=deadline, careful=True)
    if result.status == SolveStatus.OPTIMAL:
        problems = model.check(result.values, integrality_tol=None)
        if problems:
            raise NumericalError(
                f'LP solution failed verification: {"; ".join(problems[:3])}'
            )
    return Solution(
        result.status,
        result.values,
        result.objective,
        bound=result.objective,
        iterations=result.iterations,
    )
