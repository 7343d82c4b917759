import numpy as np
import pytest
import yaml

from crnrealize.bnb import solve_milp
from crnrealize.encoder import (
    EncodedModel,
    RealizationProblem,
    VarMap,
    build_model,
    decode,
    encode_DE,
    encode_LC,
    encode_S,
    encode_WR,
    encode_objective,
    prefer_unit_scaling,
)
from crnrealize.errors import DecodeError, ModelError
from crnrealize.milp import MilpModel, Solution
from crnrealize.network import parse_network
from crnrealize.schema import ConjugacyMode, Objective, Relation, SolveStatus
from crnrealize.verify import published_realization

from .utils import edge_set, kinetics_on, load_sample, random_network, read_sample, solution_values


# ============================================================================
def example1_problem(**kwargs):
    return RealizationProblem.from_network(parse_network(read_sample('example1.rxn')), **kwargs)


def published(problem, net, name):
    doc = yaml.safe_load(read_sample(name))
    return published_realization(problem, kinetics_on(net, doc['network']), doc['c'])


def check_published(problem, net, name):
    """ The published realization is a feasible point of the encoded
    model and decodes back to itself
    """
    decoded = published(problem, net, name)
    encoded = build_model(problem)
    values = solution_values(encoded, decoded)
    assert encoded.model.check(values) == []

    solution = Solution(SolveStatus.OPTIMAL, values, encoded.model.objective_value(values))
    again = decode(solution, encoded.var_map, problem)
    assert again.edges == decoded.edges
    assert np.allclose(again.c, decoded.c)
    assert np.allclose(again.A_b, decoded.A_b)
    return again


# ============================================================================
class TestModelShape(object):
    def test_example1_dense_identity(self):
        encoded = build_model(
            example1_problem(objective=Objective.DENSE, weakly_reversible=True, u=20)
        )
        model = encoded.model
        assert len(model.binaries()) == 42
        assert len(model.continuous()) == 84
        assert model.name == 'dense-identity-wr'
        assert model.var_id('a_2_1') == encoded.var_map.a[(1, 0)]
        assert model.var_id('w_1_7') == encoded.var_map.w[(0, 6)]

        # de, s (lo and hi), wr, wrs (lo and hi)
        assert len(model.constraints) == 14 + 84 + 7 + 84
        assert all(coeff == -1.0 for coeff in model.objective.values())

    def test_example1_scaling(self):
        encoded = build_model(
            example1_problem(weakly_reversible=True, conjugacy=ConjugacyMode.SCALING)
        )
        model = encoded.model
        assert len(model.binaries()) == 42
        assert len(model.continuous()) == 86
        t1 = model.variables[encoded.var_map.t[0]]
        assert (t1.name, t1.lower, t1.upper) == ('t_1', 0.1, 10.0)
        assert model.constraints[0].name == 'lc_1_1'
        assert all(coeff == 1.0 for coeff in model.objective.values())

    def test_kinetic_row(self):
        encoded = build_model(example1_problem())
        row = encoded.model.constraints[0]
        assert row.name == 'de_1_1'
        assert row.rhs == 0.0
        # complexes with one X1 drop out
        names = [encoded.model.variables[var].name for var, _ in row.terms]
        assert names == ['a_3_1', 'a_4_1', 'a_7_1']

    def test_mode_errors(self):
        identity = example1_problem()
        scaling = example1_problem(conjugacy=ConjugacyMode.SCALING)
        with pytest.raises(ModelError):
            encode_DE(scaling, EncodedModel(MilpModel(), VarMap(), scaling))
        with pytest.raises(ModelError):
            encode_LC(identity, EncodedModel(MilpModel(), VarMap(), identity))

    def test_families_one_by_one(self):
        problem = example1_problem(epsilon=0.5, u=20)
        enc = EncodedModel(MilpModel('parts'), VarMap(), problem)

        encode_S(problem, enc)
        model = enc.model
        assert len(model.binaries()) == 42
        assert len(model.continuous()) == 42
        lo, hi = model.constraints[0], model.constraints[1]
        assert (lo.name, lo.relation, dict(lo.terms)) == (
            's_lo_2_1',
            Relation.GE,
            {enc.var_map.a[(1, 0)]: 1.0, enc.var_map.delta[(1, 0)]: -0.5},
        )
        assert (hi.name, hi.relation) == ('s_hi_2_1', Relation.LE)
        assert dict(hi.terms)[enc.var_map.delta[(1, 0)]] == -20.0

        encode_WR(problem, enc)
        assert len(model.binaries()) == 42
        assert len(model.continuous()) == 84
        names = [con.name for con in model.constraints]
        assert names.count('wr_1') == 1
        assert len([n for n in names if n.startswith('wrs_')]) == 84

        encode_objective(problem, enc)
        assert sorted(model.objective) == sorted(enc.var_map.delta.values())
        assert set(model.objective.values()) == {1.0}

    def test_forbidden_reaction(self):
        u = np.full((7, 7), 20.0)
        u[1, 0] = 0.0
        encoded = build_model(example1_problem(u=u))
        delta = encoded.model.variables[encoded.var_map.delta[(1, 0)]]
        assert (delta.lower, delta.upper) == (0.0, 0.0)
        assert len(encoded.model.binaries()) == 42

    @pytest.mark.parametrize(
        'kwargs',
        [
            {'epsilon': 20.0},
            {'epsilon': 0.0},
            {'epsilon_c': 1.5},
            {'epsilon_c': 0.0},
            {'u': -1.0},
            {'u': np.ones((3, 3))},
            {'species': ['X1']},
        ],
    )
    def test_invalid_problem(self, kwargs):
        with pytest.raises(ModelError):
            example1_problem(**kwargs)

    def test_species_names(self):
        problem = example1_problem(species=['A', 'B'])
        assert problem.species == ['A', 'B']
        assert example1_problem().species == ['X1', 'X2']

    def test_invalid_matrices(self):
        with pytest.raises(ModelError):
            RealizationProblem(np.ones((2, 3)), np.ones((2, 2)))
        with pytest.raises(ModelError):
            RealizationProblem(-np.ones((1, 2)), np.zeros((1, 2)))

    def test_epsilon_c_defaults_to_epsilon(self):
        problem = example1_problem(epsilon=0.25)
        assert problem.epsilon_c == 0.25
        assert problem.u[0, 0] == 0.0
        assert problem.pairs()[:3] == [(1, 0), (2, 0), (3, 0)]


# ============================================================================
class TestPublished(object):
    def test_example1_sparse(self):
        problem = example1_problem(
            weakly_reversible=True, conjugacy=ConjugacyMode.SCALING, epsilon=0.1, u=20
        )
        net = parse_network(read_sample('example1.rxn'))
        decoded = check_published(problem, net, 'example1-sparse.yaml')
        assert edge_set(decoded.edges) == {(1, 6), (6, 3), (3, 5), (5, 1)}
        assert decoded.t == pytest.approx([0.1, 0.2])
        assert sorted(decoded.A_b[decoded.support]) == pytest.approx([0.2, 0.2, 0.4, 0.6])
        assert decoded.a_tilde is not None

    def test_example1_dense(self):
        problem = example1_problem(
            objective=Objective.DENSE, weakly_reversible=True, epsilon=2 / 3, u=20
        )
        net = parse_network(read_sample('example1.rxn'))
        decoded = check_published(problem, net, 'example1-dense.yaml')
        assert decoded.num_reactions == 8
        assert decoded.objective_value == -8.0
        assert decoded.c.tolist() == [1.0, 1.0]

    def test_example2(self, manager):
        net = load_sample(manager, 'example2.ode', 'example2.complexes')
        problem = RealizationProblem.from_network(
            net,
            weakly_reversible=True,
            conjugacy=ConjugacyMode.SCALING,
            epsilon=0.1,
            u=10,
        )
        decoded = check_published(problem, net, 'example2-published.yaml')
        assert edge_set(decoded.edges) == {(1, 8), (8, 2), (2, 9), (9, 2), (9, 17), (17, 1)}
        assert decoded.A_b[decoded.support] == pytest.approx(np.full(6, 10.0))
        assert decoded.t == pytest.approx(np.full(4, 10.0))


# ============================================================================
class TestDecode(object):
    def pair_problem(self):
        return RealizationProblem.from_network(
            parse_network('A -> B ; 1\nB -> A ; 2\n'), weakly_reversible=True
        )

    def test_no_values(self):
        problem = self.pair_problem()
        encoded = build_model(problem)
        with pytest.raises(DecodeError):
            decode(Solution(SolveStatus.INFEASIBLE), encoded.var_map, problem)

    def test_rate_below_epsilon(self):
        problem = self.pair_problem()
        encoded = build_model(problem)
        values = np.zeros(encoded.model.num_variables)
        values[encoded.var_map.delta[(1, 0)]] = 1.0
        values[encoded.var_map.a[(1, 0)]] = 0.01
        with pytest.raises(DecodeError):
            decode(Solution(SolveStatus.OPTIMAL, values), encoded.var_map, problem)

    def test_rate_without_reaction(self):
        problem = self.pair_problem()
        encoded = build_model(problem)
        values = np.zeros(encoded.model.num_variables)
        values[encoded.var_map.a[(0, 1)]] = 1.0
        with pytest.raises(DecodeError):
            decode(Solution(SolveStatus.OPTIMAL, values), encoded.var_map, problem)

    def test_solved_pair(self):
        problem = self.pair_problem()
        encoded = build_model(problem)
        decoded = decode(solve_milp(encoded.model), encoded.var_map, problem)
        assert decoded.num_reactions == 2
        assert np.allclose(decoded.A_b, [[-1.0, 2.0], [1.0, -2.0]])
        assert np.allclose(decoded.a_tilde.sum(axis=0), 0.0)
        assert decoded.b[0] * decoded.A_b[1, 0] == pytest.approx(decoded.a_tilde[1, 0])


# ============================================================================
def solve_support(problem):
    encoded = build_model(problem)
    solution = solve_milp(encoded.model)
    assert solution.status == SolveStatus.OPTIMAL
    return decode(solution, encoded.var_map, problem).support


class TestDenseContainsSparse(object):
    def test_random_networks(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            net = random_network(rng)
            sparse = solve_support(
                RealizationProblem.from_network(net, epsilon=1e-3, u=20)
            )
            dense = solve_support(
                RealizationProblem.from_network(
                    net, objective=Objective.DENSE, epsilon=1e-3, u=20
                )
            )
            assert sparse.sum() <= len(net.reactions) <= dense.sum()
            assert not np.any(sparse & ~dense)

    @pytest.mark.slow
    def test_example1(self):
        net = parse_network(read_sample('example1.rxn'))
        sparse = solve_support(RealizationProblem.from_network(net, epsilon=1e-3))
        dense = solve_support(
            RealizationProblem.from_network(net, objective=Objective.DENSE, epsilon=1e-3)
        )
        assert not np.any(sparse & ~dense)


# ============================================================================
class TestUnitScaling(object):
    def pair(self, **kwargs):
        problem = RealizationProblem.from_network(
            parse_network('A -> B ; 1\nB -> A ; 2\n'), **kwargs
        )
        encoded = build_model(problem)
        return problem, encoded, solve_milp(encoded.model)

    def test_pulls_c_to_one(self):
        problem, encoded, solution = self.pair(conjugacy=ConjugacyMode.SCALING)
        refined = prefer_unit_scaling(encoded, solution)
        assert refined.status == SolveStatus.OPTIMAL
        assert refined.objective_value == solution.objective_value
        assert encoded.model.check(refined.values) == []

        decoded = decode(refined, encoded.var_map, problem)
        assert decoded.c == pytest.approx([1.0, 1.0])
        assert np.allclose(decoded.A_b, [[-1.0, 2.0], [1.0, -2.0]])

    def test_keeps_fixed_ratio(self):
        problem = example1_problem(
            weakly_reversible=True, conjugacy=ConjugacyMode.SCALING, epsilon=0.1, u=20
        )
        net = parse_network(read_sample('example1.rxn'))
        encoded = build_model(problem)
        values = solution_values(encoded, published(problem, net, 'example1-sparse.yaml'))
        solution = Solution(SolveStatus.OPTIMAL, values, encoded.model.objective_value(values))

        decoded = decode(prefer_unit_scaling(encoded, solution), encoded.var_map, problem)
        assert edge_set(decoded.edges) == {(1, 6), (6, 3), (3, 5), (5, 1)}
        # c1 = 2 c2 on this reaction set, |t1 - 1| + |t2 - 1| is least at c = (2, 1)
        assert decoded.c == pytest.approx([2.0, 1.0])

    def test_unchanged(self):
        _, encoded, solution = self.pair()
        assert prefer_unit_scaling(encoded, solution) is solution

        _, encoded, _ = self.pair(conjugacy=ConjugacyMode.SCALING)
        infeasible = Solution(SolveStatus.INFEASIBLE)
        assert prefer_unit_scaling(encoded, infeasible) is infeasible
