import numpy as np
import pytest
import yaml

from crnrealize.encoder import RealizationProblem
from crnrealize.errors import AuditError, ModelError
from crnrealize.network import Network, parse_network
from crnrealize.schema import ConjugacyMode, Objective
from crnrealize.verify import (
    audit_solution,
    balanced_flow,
    ensure_audit,
    kernel_crosscheck,
    kernel_oracle,
    kernel_vector,
    published_realization,
)

from .utils import kinetics_on, read_sample


# ============================================================================
def example1_published(name, **kwargs):
    net = parse_network(read_sample('example1.rxn'))
    problem = RealizationProblem.from_network(net, **kwargs)
    doc = yaml.safe_load(read_sample(name))
    return problem, published_realization(problem, kinetics_on(net, doc['network']), doc['c'])


def sparse_published():
    return example1_published(
        'example1-sparse.yaml',
        weakly_reversible=True,
        conjugacy=ConjugacyMode.SCALING,
        epsilon=0.1,
        u=20,
    )


def dense_published():
    return example1_published(
        'example1-dense.yaml',
        objective=Objective.DENSE,
        weakly_reversible=True,
        epsilon=2 / 3,
        u=20,
    )


def failed_families(report):
    return sorted(name for name, ok in report.families.items() if not ok)


# ============================================================================
class TestKernel(object):
    @pytest.mark.parametrize(
        'A,expected',
        [
            ([[-1.0, 2.0], [1.0, -2.0]], True),
            ([[-1.0, 0.0], [1.0, 0.0]], False),
            ([[0.0, 0.0], [0.0, 0.0]], True),
            ([[-1.0, 0.0, 1.0], [1.0, -1.0, 0.0], [0.0, 1.0, -1.0]], True),
            ([[-1.0, 0.0, 0.0], [1.0, -1.0, 0.0], [0.0, 1.0, 0.0]], False),
        ],
    )
    def test_oracle(self, A, expected):
        assert kernel_oracle(np.array(A)) == expected

    def test_oracle_example1_dense(self):
        problem, decoded = dense_published()
        assert kernel_oracle(decoded.A_b)

    def test_vector(self):
        b = kernel_vector(np.array([[-1.0, 2.0], [1.0, -2.0]]))
        assert b == pytest.approx([2.0, 1.0])
        assert kernel_vector(np.array([[-1.0, 0.0], [1.0, 0.0]])) is None

    def test_not_square(self):
        with pytest.raises(ModelError):
            kernel_oracle(np.zeros((2, 3)))

    def test_crosscheck(self):
        report = kernel_crosscheck(42, 200, 6)
        assert report.disagreements == 0
        assert report.weakly_reversible + report.not_weakly_reversible == 200
        assert report.weakly_reversible > 0 and report.not_weakly_reversible > 0

    def test_crosscheck_arguments(self):
        with pytest.raises(ModelError):
            kernel_crosscheck(trials=0)


# ============================================================================
class TestBalancedFlow(object):
    def test_cycle(self):
        support = np.zeros((3, 3), dtype=bool)
        support[1, 0] = support[2, 1] = support[0, 2] = True
        flow = balanced_flow(support, 0.5, 2.0)
        assert flow is not None
        assert np.allclose(flow.sum(axis=0), 0.0)
        off = flow - np.diag(np.diag(flow))
        assert np.allclose(off.sum(axis=0), off.sum(axis=1))
        assert np.all(off[support] >= 0.5 - 1e-9)

    def test_dangling_edge(self):
        support = np.zeros((3, 3), dtype=bool)
        support[1, 0] = support[0, 1] = support[2, 1] = True
        assert balanced_flow(support, 0.1, 20.0) is None

    def test_bounds_too_tight(self):
        # 3 -> 1 carries both flows leaving 1, at least 2 epsilon
        support = np.zeros((3, 3), dtype=bool)
        support[1, 0] = support[2, 1] = support[0, 2] = support[2, 0] = True
        u = np.full((3, 3), 1.5)
        assert balanced_flow(support, 1.0, u) is None
        assert balanced_flow(support, 0.5, u) is not None

    def test_empty(self):
        flow = balanced_flow(np.zeros((2, 2), dtype=bool), 0.1, 1.0)
        assert flow.tolist() == [[0.0, 0.0], [0.0, 0.0]]


# ============================================================================
class TestAudit(object):
    def test_example1_sparse(self):
        problem, decoded = sparse_published()
        report = ensure_audit(audit_solution(problem, decoded))
        assert report.passed
        assert sorted(report.families) == [
            'conjugacy',
            'kinetics',
            'lc',
            's',
            'scc',
            'support',
            't_bounds',
            'wr',
            'wrs',
        ]
        assert report.violations == []

    def test_example1_dense(self):
        problem, decoded = dense_published()
        report = audit_solution(problem, decoded)
        assert report.passed
        assert 'de' in report.families and 'lc' not in report.families

    def test_support_disagrees(self):
        problem, decoded = sparse_published()
        support = decoded.support.copy()
        support[1, 0] = True
        report = audit_solution(problem, decoded._replace(support=support))
        assert 'support' in failed_families(report)
        assert 's' in failed_families(report)

    def test_wrong_rate(self):
        problem, decoded = dense_published()
        A_b = decoded.A_b.copy()
        A_b[0, 2] += 1.0
        A_b[2, 2] -= 1.0
        report = audit_solution(problem, decoded._replace(A_b=A_b))
        assert failed_families(report) == ['conjugacy', 'de']
        assert report.violations[0].family == 'de'

    def test_wrong_c(self):
        problem, decoded = sparse_published()
        report = audit_solution(problem, decoded._replace(c=np.array([10.0, 4.0])))
        assert 't_bounds' in failed_families(report)
        assert 'conjugacy' in failed_families(report)

    def test_identity_needs_unit_c(self):
        problem, decoded = dense_published()
        report = audit_solution(problem, decoded._replace(c=np.array([2.0, 1.0])))
        assert 'de' in failed_families(report)

    def test_missing_flow(self):
        problem, decoded = sparse_published()
        report = audit_solution(problem, decoded._replace(a_tilde=None))
        assert failed_families(report) == ['wr']

    def test_not_weakly_reversible(self):
        net = parse_network(read_sample('example1.rxn'))
        problem = RealizationProblem.from_network(net, weakly_reversible=True)
        decoded = published_realization(problem, kinetics_on(net, net), [1.0, 1.0])
        assert decoded.a_tilde is None
        report = audit_solution(problem, decoded)
        assert failed_families(report) == ['scc', 'wr']
        scc = [v for v in report.violations if v.family == 'scc'][0]
        assert 'C1->C2' in scc.detail

    def test_ensure_audit(self):
        problem, decoded = sparse_published()
        report = audit_solution(problem, decoded._replace(a_tilde=None))
        with pytest.raises(AuditError) as exc:
            ensure_audit(report)
        assert 'wr' in str(exc.value)

    def test_empty_network(self):
        net = Network(['X'], [[1], [2]], [])
        problem = RealizationProblem.from_network(net, weakly_reversible=True)
        decoded = published_realization(problem, np.zeros((2, 2)), [1.0])
        report = audit_solution(problem, decoded)
        assert report.passed
        assert report.notes == ['network has no reactions; weak reversibility holds vacuously']
