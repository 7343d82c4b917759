import numpy as np
import pytest
import yaml

from crnrealize.conjugacy import (
    apply_transform,
    check_conjugacy,
    conjugacy_result,
    rk4,
    trajectory_check,
)
from crnrealize.errors import NetworkError, PreconditionError
from crnrealize.network import build_Ak, build_Y, parse_network
from crnrealize.schema import TrajectoryStatus

from .utils import kinetics_on, read_sample


# ============================================================================
@pytest.fixture
def example1():
    return parse_network(read_sample('example1.rxn'))


@pytest.fixture
def sparse_prime(example1):
    """ Conjugate kinetics of the sparse realization of example 1 """
    doc = yaml.safe_load(read_sample('example1-sparse.yaml'))
    return kinetics_on(example1, doc['network'])


def sparse_A_b(m=7):
    A_b = np.zeros((m, m))
    for src, dst, rate in [(0, 5, 0.6), (5, 2, 0.2), (2, 4, 0.2), (4, 0, 0.4)]:
        A_b[dst, src] = rate
    np.fill_diagonal(A_b, -A_b.sum(axis=0))
    return A_b


# ============================================================================
class TestTransform(object):
    def test_example1_rates(self, example1, sparse_prime):
        Y = build_Y(example1)
        A_prime = apply_transform(sparse_A_b(), [10.0, 5.0], Y)
        assert A_prime == pytest.approx(sparse_prime)
        assert [A_prime[5, 0], A_prime[2, 5], A_prime[4, 2], A_prime[0, 4]] == pytest.approx(
            [150.0, 10.0, 100.0, 500.0]
        )

    def test_zero_pattern(self, example1):
        A_b = sparse_A_b()
        A_prime = apply_transform(A_b, [3.0, 0.5], build_Y(example1))
        assert np.array_equal(A_prime == 0, A_b == 0)
        assert np.allclose(A_prime.sum(axis=0), 0.0)

    def test_identity(self, example1):
        A_b = sparse_A_b()
        result = conjugacy_result(A_b, [1.0, 1.0], build_Y(example1))
        assert np.array_equal(result.A_k_prime, A_b)
        assert np.array_equal(result.T, np.eye(2))

    @pytest.mark.parametrize('c', [[1.0, 0.0], [1.0, -2.0], [[1.0, 1.0]]])
    def test_nonpositive_c(self, example1, c):
        with pytest.raises(PreconditionError):
            apply_transform(sparse_A_b(), c, build_Y(example1))

    def test_shape(self, example1):
        with pytest.raises(NetworkError):
            apply_transform(np.zeros((3, 3)), [1.0, 1.0], build_Y(example1))


# ============================================================================
class TestCheckConjugacy(object):
    def test_example1_sparse(self, example1, sparse_prime):
        report = check_conjugacy(
            build_Y(example1), build_Ak(example1), sparse_prime, [10.0, 5.0]
        )
        assert report.passed
        assert report.algebraic_residual < 1e-9
        assert report.first_violation is None
        assert report.seed == 42 and report.sample_count == 100

    def test_wrong_c(self, example1, sparse_prime):
        report = check_conjugacy(
            build_Y(example1), build_Ak(example1), sparse_prime, [10.0, 4.0]
        )
        assert not report.passed
        assert report.first_violation['sample'] == 0

    def test_seeded(self, example1, sparse_prime):
        args = (build_Y(example1), build_Ak(example1), sparse_prime, [10.0, 5.0])
        first = check_conjugacy(*args, sample_count=10, seed=3)
        second = check_conjugacy(*args, sample_count=10, seed=3)
        assert first.max_relative_residual == second.max_relative_residual

    def test_preconditions(self, example1, sparse_prime):
        Y, A_k = build_Y(example1), build_Ak(example1)
        with pytest.raises(PreconditionError):
            check_conjugacy(Y, A_k, sparse_prime, [10.0, 0.0])
        with pytest.raises(NetworkError):
            check_conjugacy(Y, A_k, sparse_prime, [10.0, 5.0, 1.0])


# ============================================================================
class TestTrajectory(object):
    def test_rk4_decay(self):
        states = rk4(lambda x: -x, np.array([1.0]), 1.0, 100, 10)
        assert states.shape == (10, 1)
        assert states[-1, 0] == pytest.approx(np.exp(-1.0), rel=1e-8)

    def test_rk4_escape(self):
        states = rk4(lambda x: x * x, np.array([1.0]), 2.0, 1000, 100)
        assert len(states) < 10

    def test_identity(self):
        net = parse_network('A -> B ; 1\nB -> A ; 2\n')
        A_k = build_Ak(net)
        report = trajectory_check(build_Y(net), A_k, A_k, [1.0, 1.0], [1.0, 2.0])
        assert report.status == TrajectoryStatus.PASSED
        assert report.max_deviation == 0.0
        assert len(report.checkpoints) == 10
        assert report.checkpoints[-1] == 5.0

    def test_example1_sparse(self, example1, sparse_prime):
        report = trajectory_check(
            build_Y(example1),
            build_Ak(example1),
            sparse_prime,
            [10.0, 5.0],
            [1.0, 1.0],
            t_end=1.0,
        )
        assert report.status == TrajectoryStatus.PASSED
        assert report.max_deviation <= 1e-5

    def test_wrong_conjugacy(self, example1, sparse_prime):
        report = trajectory_check(
            build_Y(example1),
            build_Ak(example1),
            sparse_prime,
            [10.0, 4.0],
            [1.0, 1.0],
            t_end=1.0,
        )
        assert report.status != TrajectoryStatus.PASSED

    def test_escape_is_inconclusive(self):
        net = parse_network('2 X -> 3 X ; 1\n')
        A_k = build_Ak(net)
        report = trajectory_check(build_Y(net), A_k, A_k, [1.0], [1.0], t_end=2.0)
        assert report.status == TrajectoryStatus.INCONCLUSIVE
        assert report.message.startswith('state left')

    @pytest.mark.parametrize(
        'x0,t_end', [([0.0, 1.0], 5.0), ([1.0, -1.0], 5.0), ([1.0, 1.0], 0.0)]
    )
    def test_preconditions(self, example1, x0, t_end):
        A_k = build_Ak(example1)
        with pytest.raises(PreconditionError):
            trajectory_check(build_Y(example1), A_k, A_k, [1.0, 1.0], x0, t_end=t_end)
