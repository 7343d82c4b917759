from __future__ import annotations

import heapq
import math
import time
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from .errors import NumericalError
from .milp import MilpModel, Solution
from .schema import MilpConfig, SolveStatus
from .simplex import LinearProgram, LpResult, WarmStart, solve_relaxation
from .utils import get_logger

__all__ = ['BranchAndBound', 'solve_milp']

logger = get_logger('bnb')

Fixing = Tuple[int, float]


# ============================================================================
class Incumbent(NamedTuple):
    objective: float
    values: np.ndarray


class _OutOfTime(Exception):
    pass


class BranchAndBound:
    """Exact LP-based branch-and-bound over the binaries of a model.

    Nodes are explored best bound first (ties by creation order), the
    branching variable is the most fractional binary (lowest id on ties)
    and each child fixes it to 0 or 1. Child relaxations start from the
    parent's final basis. Every relaxation runs against the deadline of
    the time limit.
    """

    def __init__(self, model: MilpModel, config: Optional[MilpConfig] = None) -> None:
        self.model = model.freeze()
        self.config = config or MilpConfig()
        self.lp = LinearProgram(model)
        self.binaries = np.array(model.binaries(), dtype=int)
        self.integral_objective = model.objective_is_integral()

        self.base_lower = np.array([var.lower for var in model.variables], dtype=float)
        self.base_upper = np.array([var.upper for var in model.variables], dtype=float)

        self.incumbent: Optional[Incumbent] = None
        self.deadline: Optional[float] = None
        self.nodes = 0
        self.iterations = 0
        self._heap: List[Tuple[float, int, Tuple[Fixing, ...], LpResult]] = []
        self._seq = 0

    # ------------------------------------------------------------------------
    def _relax(
        self,
        fixings: Tuple[Fixing, ...],
        warm: Optional[WarmStart] = None,
        careful: bool = False,
    ) -> LpResult:
        lower = self.base_lower.copy()
        upper = self.base_upper.copy()
        for var, value in fixings:
            lower[var] = upper[var] = value
        col_lower, col_upper = self.lp.bounds(lower, upper)
        result = solve_relaxation(
            self.lp, col_lower, col_upper, warm, deadline=self.deadline, careful=careful
        )
        self.iterations += result.iterations
        if result.status == SolveStatus.TIME_LIMIT:
            raise _OutOfTime()

        if result.status == SolveStatus.OPTIMAL:
            problems = self.model.check(result.values, integrality_tol=None)
            for var, value in fixings:
                if abs(result.values[var] - value) > self.config.feasibility_tol:
                    problems.append(f'fixing of {self.model.variables[var].name} lost')
            if problems and not careful:
                logger.debug('relaxation failed verification, re-solving with careful pivoting')
                return self._relax(fixings, careful=True)
            if problems:
                raise NumericalError(
                    f'relaxation failed verification: {"; ".join(problems[:3])}'
                )
        return result

    def _prunable(self, bound: float) -> bool:
        if self.incumbent is None:
            return False
        best = self.incumbent.objective
        if self.integral_objective:
            return math.ceil(bound - self.config.integrality_tol) >= best - 0.5
        return bound >= best - 1e-9 * max(1.0, abs(best))

    def _push(self, result: LpResult, fixings: Tuple[Fixing, ...]) -> None:
        if result.status != SolveStatus.OPTIMAL or self._prunable(result.objective):
            return
        heapq.heappush(self._heap, (result.objective, self._seq, fixings, result))
        self._seq += 1

    def _branching_variable(self, values: np.ndarray) -> int:
        if not self.binaries.size:
            return -1
        frac = np.abs(values[self.binaries] - np.round(values[self.binaries]))
        pick = int(np.argmax(frac))
        if frac[pick] <= self.config.integrality_tol:
            return -1
        return int(self.binaries[pick])

    def _try_integral(
        self, result: LpResult, fixings: Tuple[Fixing, ...]
    ) -> Optional[int]:
        """Fixes every binary to its rounded value and re-solves so the
        continuous part is exact. Returns a branching variable when the
        rounded point turns out infeasible.
        """
        rounded = tuple(
            (int(var), float(round(result.values[var]))) for var in self.binaries
        )
        polished = self._relax(rounded, result.warm) if rounded else result
        if polished.status == SolveStatus.OPTIMAL:
            self._offer(polished.values)
            return None

        frac = np.abs(result.values[self.binaries] - np.round(result.values[self.binaries]))
        fixed = dict(fixings)
        free = [num for num, var in enumerate(self.binaries) if var not in fixed]
        if not free:
            return None
        pick = max(free, key=lambda num: (frac[num], -num))
        return int(self.binaries[pick])

    def _offer(self, values: np.ndarray) -> bool:
        if self.model.check(values, tol=self.config.feasibility_tol):
            return False
        objective = self.model.objective_value(values)
        if self.incumbent is None or objective < self.incumbent.objective - 1e-12:
            self.incumbent = Incumbent(objective, values)
            logger.debug('node %d: new incumbent %.9g', self.nodes, objective)
            return True
        return False

    def _round_up(self, root: LpResult) -> None:
        """Seeds the incumbent with every binary fixed to the ceiling of
        its relaxed value
        """
        fixings = tuple(
            (int(var), 1.0 if root.values[var] > self.config.integrality_tol else 0.0)
            for var in self.binaries
        )
        result = self._relax(fixings, root.warm)
        if result.status == SolveStatus.OPTIMAL and self._offer(result.values):
            logger.debug('rounding heuristic found objective %.9g', result.objective)

    # ------------------------------------------------------------------------
    def solve(self) -> Solution:
        start = time.monotonic()
        self.deadline = start + self.config.time_limit
        self.nodes = 1
        try:
            root = self._relax(())
        except _OutOfTime:
            logger.info('time limit reached in the root relaxation')
            return Solution(SolveStatus.TIME_LIMIT, nodes=self.nodes, iterations=self.iterations)

        if root.status != SolveStatus.OPTIMAL:
            logger.debug('root relaxation %s', root.status.value)
            return Solution(root.status, nodes=self.nodes, iterations=self.iterations)

        root_bound = root.objective
        limited = False
        try:
            if self.config.rounding_heuristic and self.binaries.size:
                self._round_up(root)

            self._push(root, ())
            while self._heap:
                if (
                    time.monotonic() >= self.deadline
                    or self.nodes >= self.config.node_limit
                ):
                    limited = True
                    break

                bound, _, fixings, result = heapq.heappop(self._heap)
                if self._prunable(bound):
                    continue

                var = self._branching_variable(result.values)
                if var < 0:
                    var = self._try_integral(result, fixings)
                    if var is None:
                        continue

                for value in (0.0, 1.0):
                    child = fixings + ((var, value),)
                    self.nodes += 1
                    self._push(self._relax(child, result.warm), child)
        except _OutOfTime:
            limited = True

        elapsed = time.monotonic() - start
        logger.debug(
            'branch-and-bound: %d nodes, %d simplex iterations, %.2fs',
            self.nodes,
            self.iterations,
            elapsed,
        )

        if limited:
            logger.info('solver limits reached after %d nodes', self.nodes)
            if self.incumbent is None:
                return Solution(
                    SolveStatus.TIME_LIMIT,
                    nodes=self.nodes,
                    bound=root_bound,
                    iterations=self.iterations,
                )
            return Solution(
                SolveStatus.TIME_LIMIT,
                self.incumbent.values,
                self.incumbent.objective,
                nodes=self.nodes,
                bound=root_bound,
                iterations=self.iterations,
            )

        if self.incumbent is None:
            return Solution(
                SolveStatus.INFEASIBLE, nodes=self.nodes, iterations=self.iterations
            )

        return Solution(
            SolveStatus.OPTIMAL,
            self.incumbent.values,
            self.incumbent.objective,
            nodes=self.nodes,
            bound=root_bound,
            iterations=self.iterations,
        )


def solve_milp(model: MilpModel, config: Optional[MilpConfig] = None) -> Solution:
    """Solves a model to proven optimality, or until the time or node
    limit of the config is reached (status time-limit, carrying the best
    solution found if any)

    :param model: The model, frozen by this call
    :param config: Solver limits and tolerances
    :return: The solution
    """
    return BranchAndBound(model, config).solve()
