import math
import time

import numpy as np
import pytest
from mock import patch as mock_patch

from crnrealize.bnb import solve_milp
from crnrealize.errors import ModelError
from crnrealize.milp import MilpModel, Solution, export_lp_file, import_solution, lp_names
from crnrealize.schema import MilpConfig, Relation, SolveStatus, VarKind
from crnrealize.simplex import LinearProgram, LpResult, _Tableau, solve_lp, solve_relaxation
from crnrealize.verify import brute_force_milp

from .utils import random_binary_model, random_mixed_model


# ============================================================================
def knapsack():
    """ max 10 a + 13 b + 7 c + 8 d, weights 5 6 3 4, capacity 10
    """
    model = MilpModel('knapsack')
    ids = [model.add_binary(name) for name in 'abcd']
    model.add_constraint(list(zip(ids, [5, 6, 3, 4])), Relation.LE, 10)
    model.set_objective(list(zip(ids, [-10, -13, -7, -8])))
    return model


def two_by_two():
    model = MilpModel('lp')
    x = model.add_variable('x')
    y = model.add_variable('y')
    model.add_constraint({x: 1, y: 2}, '<=', 4, name='first')
    model.add_constraint({x: 3, y: 1}, '<=', 6, name='second')
    model.set_objective({x: -1, y: -1})
    return model


# ============================================================================
class TestModel(object):
    def test_build(self):
        model = two_by_two()
        assert model.num_variables == 2
        assert model.var_id('y') == 1
        assert model.binaries() == []
        assert not model.objective_is_integral()
        assert knapsack().objective_is_integral()

    def test_invalid(self):
        model = MilpModel()
        x = model.add_variable('x')
        with pytest.raises(ModelError):
            model.add_variable('x')
        with pytest.raises(ModelError):
            model.add_variable('y', lower=2.0, upper=1.0)
        with pytest.raises(ModelError):
            model.add_variable('z', VarKind.BINARY, 0.0, 2.0)
        with pytest.raises(ModelError):
            model.add_constraint([(x, 1.0), (x, 2.0)], Relation.LE, 1.0)
        with pytest.raises(ModelError):
            model.add_constraint([(5, 1.0)], Relation.LE, 1.0)
        with pytest.raises(ModelError):
            model.add_constraint([(x, math.inf)], Relation.LE, 1.0)
        with pytest.raises(ModelError):
            model.var_id('missing')

    def test_frozen(self):
        model = two_by_two().freeze()
        with pytest.raises(ModelError):
            model.add_variable('z')
        with pytest.raises(ModelError):
            model.set_objective({})

    def test_check(self):
        model = two_by_two()
        assert model.check(np.array([1.6, 1.2])) == []
        problems = model.check(np.array([4.0, 1.0]))
        assert len(problems) == 2
        assert problems[0].startswith('first violated')
        assert model.check(np.array([-1.0, 0.0]))[0].startswith('x = -1.0 outside')

    def test_no_values(self):
        solution = Solution(SolveStatus.INFEASIBLE)
        assert not solution.has_values
        with pytest.raises(ModelError):
            solution.value(0)


# ============================================================================
class TestLpFile(object):
    def test_single_variable(self):
        model = MilpModel('one')
        model.add_variable('x', upper=3.0)
        text = export_lp_file(model)
        assert 'Minimize' in text
        assert 'Bounds' in text
        assert ' 0.0 <= x <= 3.0' in text
        assert text.endswith('End\n')

    def test_sections(self):
        model = knapsack()
        x = model.add_variable('x', lower=-math.inf)
        model.add_constraint({x: 1.0}, Relation.EQ, 2.5, name='fix')
        text = export_lp_file(model)
        assert text.count(' = 2.5') == 1
        assert ' x free' in text
        assert text.split('Binaries\n')[1].split() == ['a', 'b', 'c', 'd', 'End']

    def test_names(self):
        model = MilpModel()
        model.add_variable('a[1]')
        model.add_variable('a(1)')
        model.add_variable('1x')
        assert lp_names(model) == ['a_1_', 'a_1__1', '_1x']

    def test_import(self):
        model = two_by_two()
        solution = import_solution(model, '# values\nx 1.6\ny = 1.2\n')
        assert solution.status == SolveStatus.OPTIMAL
        assert solution.objective_value == pytest.approx(-2.8)

    @pytest.mark.parametrize(
        'text', ['z 1\n', 'x one\n', 'x 1 2\n', 'x 10\n']
    )
    def test_import_errors(self, text):
        with pytest.raises(ModelError):
            import_solution(two_by_two(), text)


# ============================================================================
class TestSimplex(object):
    def test_optimal(self):
        solution = solve_lp(two_by_two())
        assert solution.status == SolveStatus.OPTIMAL
        assert solution.values == pytest.approx([1.6, 1.2])
        assert solution.objective_value == pytest.approx(-2.8)

    def test_infeasible(self):
        model = MilpModel()
        x = model.add_variable('x', upper=1.0)
        model.add_constraint({x: 1.0}, Relation.GE, 2.0)
        assert solve_lp(model).status == SolveStatus.INFEASIBLE

    def test_unbounded(self):
        model = MilpModel()
        x = model.add_variable('x')
        y = model.add_variable('y')
        model.add_constraint({x: 1.0, y: -1.0}, Relation.LE, 1.0)
        model.set_objective({x: -1.0})
        assert solve_lp(model).status == SolveStatus.UNBOUNDED

    def test_free_and_upper_only(self):
        model = MilpModel()
        x = model.add_variable('x', lower=-math.inf)
        y = model.add_variable('y', lower=-math.inf, upper=-1.0)
        model.add_constraint({x: 1.0}, Relation.GE, -3.0)
        model.add_constraint({x: 1.0, y: 1.0}, Relation.EQ, -5.0)
        model.set_objective({x: 1.0})
        solution = solve_lp(model)
        assert solution.status == SolveStatus.OPTIMAL
        assert solution.values == pytest.approx([-3.0, -2.0])

    def test_degenerate(self):
        model = MilpModel()
        ids = [model.add_variable('x{0}'.format(k)) for k in range(3)]
        for k in range(3):
            model.add_constraint({ids[k]: 1.0}, Relation.LE, 0.0)
        model.add_constraint(dict.fromkeys(ids, 1.0), Relation.LE, 0.0)
        model.set_objective(dict.fromkeys(ids, -1.0))
        solution = solve_lp(model)
        assert solution.status == SolveStatus.OPTIMAL
        assert solution.objective_value == pytest.approx(0.0)

    def test_unbounded_with_bounded_columns(self):
        model = MilpModel()
        x = model.add_variable('x', upper=1.0)
        y = model.add_variable('y')
        model.add_constraint({x: 1.0, y: -1.0}, Relation.LE, 1.0)
        model.set_objective({x: -1.0, y: -1.0})
        assert solve_lp(model).status == SolveStatus.UNBOUNDED

    def test_degenerate_cycle(self):
        """ Textbook LP on which largest coefficient pricing cycles
        """
        model = MilpModel('cycle')
        x = [model.add_variable('x{0}'.format(k)) for k in range(4)]
        model.add_constraint(dict(zip(x, [0.25, -8.0, -1.0, 9.0])), Relation.LE, 0.0)
        model.add_constraint(dict(zip(x, [0.5, -12.0, -0.5, 3.0])), Relation.LE, 0.0)
        model.add_constraint({x[2]: 1.0}, Relation.LE, 1.0)
        model.set_objective(dict(zip(x, [-0.75, 20.0, -0.5, 6.0])))
        solution = solve_lp(model)
        assert solution.status == SolveStatus.OPTIMAL
        assert solution.objective_value == pytest.approx(-1.25)

    def test_careful_pivoting_agrees(self):
        lp = LinearProgram(two_by_two().freeze())
        plain = solve_relaxation(lp)
        careful = solve_relaxation(lp, careful=True)
        assert careful.status == SolveStatus.OPTIMAL
        assert careful.values == pytest.approx(plain.values)

    def test_deadline(self):
        lp = LinearProgram(two_by_two().freeze())
        result = solve_relaxation(lp, deadline=time.monotonic() - 1.0)
        assert result.status == SolveStatus.TIME_LIMIT
        assert result.values is None
        assert solve_lp(two_by_two(), time_limit=-1.0).status == SolveStatus.TIME_LIMIT


# ============================================================================
def duplicate_columns(relation):
    """ x and y have identical columns, so a basis holding both is singular
    """
    model = MilpModel('duplicate')
    x = model.add_variable('x')
    y = model.add_variable('y')
    model.add_constraint({x: 1.0, y: 1.0}, relation, 2.0, name='first')
    model.add_constraint({x: 1.0, y: 1.0}, Relation.LE, 5.0, name='second')
    model.set_objective({x: 1.0})
    lp = LinearProgram(model.freeze())
    tab = _Tableau(lp, lp.lower, lp.upper, ())
    tab.set_basis([0, 1])
    tab.place_nonbasic()
    return lp, tab


class TestBasisRepair(object):
    def test_swaps_in_slack(self):
        lp, tab = duplicate_columns(Relation.GE)
        tab.refactor(lp.c)
        assert tab.basis.tolist() == [0, 2]
        assert not tab.saved
        assert tab.x == pytest.approx([5.0, 0.0, -3.0, 0.0])
        assert np.allclose(tab.A @ tab.x, lp.b)

    def test_shifted_bounds_restored(self):
        lp, tab = duplicate_columns(Relation.EQ)
        tab.refactor(lp.c)
        # the equality slack came out at -3
        assert list(tab.saved) == [2]
        assert tab.optimize(lp.c, 100) == SolveStatus.OPTIMAL
        assert not tab.saved
        assert (tab.lower[2], tab.upper[2]) == (0.0, 0.0)
        assert tab.x[:2] == pytest.approx([0.0, 2.0])
        assert np.allclose(tab.A @ tab.x, lp.b)


# ============================================================================
class TestBranchAndBound(object):
    def test_knapsack(self):
        solution = solve_milp(knapsack())
        assert solution.status == SolveStatus.OPTIMAL
        assert solution.objective_value == pytest.approx(-21.0)
        assert solution.values == pytest.approx([0.0, 1.0, 0.0, 1.0])
        assert solution.bound <= solution.objective_value + 1e-9
        assert brute_force_milp(knapsack()).objective_value == pytest.approx(-21.0)

    def test_infeasible(self):
        model = MilpModel()
        a = model.add_binary('a')
        b = model.add_binary('b')
        model.add_constraint({a: 1.0, b: 1.0}, Relation.EQ, 1.0)
        model.add_constraint({a: 1.0, b: -1.0}, Relation.EQ, 0.0)
        assert solve_milp(model).status == SolveStatus.INFEASIBLE
        assert brute_force_milp(model).status == SolveStatus.INFEASIBLE

    def test_node_limit(self):
        solution = solve_milp(knapsack(), MilpConfig(node_limit=1))
        assert solution.status == SolveStatus.TIME_LIMIT
        assert not solution.has_values

    def test_time_limit_in_root(self):
        solution = solve_milp(knapsack(), MilpConfig(time_limit=0.0))
        assert solution.status == SolveStatus.TIME_LIMIT
        assert not solution.has_values
        assert solution.nodes == 1

    def test_time_limit_inside_relaxation(self):
        calls = []

        def root_only(*args, **kwargs):
            calls.append(kwargs['deadline'])
            if len(calls) == 1:
                return solve_relaxation(*args, **kwargs)
            return LpResult(SolveStatus.TIME_LIMIT, None, None, None, 0)

        with mock_patch('crnrealize.bnb.solve_relaxation', side_effect=root_only):
            solution = solve_milp(knapsack(), MilpConfig(time_limit=60.0))
        assert solution.status == SolveStatus.TIME_LIMIT
        assert solution.bound == pytest.approx(-22.0)
        assert len(calls) == 2
        assert all(deadline is not None for deadline in calls)

    def test_reproducible(self):
        first = solve_milp(knapsack())
        second = solve_milp(knapsack())
        assert np.array_equal(first.values, second.values)
        assert first.nodes == second.nodes

    def test_random_binary_models(self):
        rng = np.random.default_rng(42)
        for num in range(50):
            model = random_binary_model(rng, num)
            solution = solve_milp(model)
            oracle = brute_force_milp(model)
            assert solution.status == oracle.status, model
            if oracle.status == SolveStatus.OPTIMAL:
                assert solution.objective_value == pytest.approx(oracle.objective_value)
                assert model.check(solution.values) == []
                assert solution.bound <= solution.objective_value + 1e-7

    def test_random_mixed_models(self):
        rng = np.random.default_rng(7)
        for num in range(20):
            model = random_mixed_model(rng, num)
            solution = solve_milp(model)
            oracle = brute_force_milp(model)
            assert oracle.status == SolveStatus.OPTIMAL
            assert solution.status == SolveStatus.OPTIMAL
            assert solution.objective_value == pytest.approx(oracle.objective_value, abs=1e-6)
            assert model.check(solution.values) == []

    def test_enumeration_limit(self):
        model = MilpModel()
        for k in range(21):
            model.add_binary('x{0}'.format(k))
        with pytest.raises(ModelError):
            brute_force_milp(model)
