import os

import numpy as np

from crnrealize.canonical import PolySystem, align_complexes
from crnrealize.milp import MilpModel
from crnrealize.network import Network, parse_network
from crnrealize.schema import Relation

__all__ = [
    'SAMPLE_DIR',
    'edge_set',
    'kinetics_on',
    'load_sample',
    'random_binary_model',
    'random_kinetic_system',
    'random_mixed_model',
    'random_network',
    'read_sample',
    'sample_path',
    'solution_values',
]

SAMPLE_DIR = os.path.join(
    os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'sample-problems'
)


# ============================================================================
def sample_path(name):
    return os.path.join(SAMPLE_DIR, name)


def read_sample(name):
    with open(sample_path(name), 'rt') as fh:
        return fh.read()


def load_sample(manager, name, complexes=None):
    """ Input network of a sample problem, complexes numbered as in the
    given complex list
    """
    net = manager.load_network(sample_path(name))
    if complexes:
        order = manager.parse_complexes(read_sample(complexes), net.species_names)
        net = align_complexes(net, order)[0]
    return net


def edge_set(edges):
    """ 1-based (source, target) pairs
    """
    return {(src + 1, dst + 1) for src, dst in edges}


def kinetics_on(net, candidate):
    """ Kinetics matrix of the candidate network (reaction file text or
    Network) over the complexes of net
    """
    if isinstance(candidate, str):
        candidate = parse_network(candidate)

    A = np.zeros((net.m, net.m))
    for react in candidate.reactions:
        src = net.complex_index(candidate.complexes[react.source].coeffs)
        dst = net.complex_index(candidate.complexes[react.target].coeffs)
        assert src is not None and dst is not None
        A[dst, src] = react.rate
    np.fill_diagonal(A, -A.sum(axis=0))
    return A


def solution_values(encoded, decoded):
    """ Variable values of the encoded model that describe the decoded
    realization
    """
    values = np.zeros(encoded.model.num_variables)
    var_map = encoded.var_map
    for (i, j), var in var_map.a.items():
        values[var] = decoded.A_b[i, j]
    for (i, j), var in var_map.delta.items():
        values[var] = 1.0 if decoded.support[i, j] else 0.0
    for s, var in enumerate(var_map.t):
        values[var] = decoded.t[s]
    if decoded.a_tilde is not None:
        for (i, j), var in var_map.w.items():
            values[var] = decoded.a_tilde[i, j]
    return values


# ============================================================================
def random_kinetic_system(rng, n_max=4, degree_max=4):
    """ Polynomial system with at most n_max species and monomials of
    degree at most degree_max, negative terms always containing their
    own species
    """
    n = int(rng.integers(1, n_max + 1))
    equations = []
    for i in range(n):
        terms = []
        for _ in range(int(rng.integers(1, 5))):
            exps = [int(p) for p in rng.integers(0, 3, size=n)]
            while sum(exps) > degree_max:
                exps[int(np.argmax(exps))] -= 1

            coeff = float(rng.uniform(0.5, 5.0))
            if rng.random() < 0.5:
                coeff = -coeff
                if exps[i] == 0:
                    if sum(exps) == degree_max:
                        exps[int(np.argmax(exps))] -= 1
                    exps[i] = 1
            terms.append((coeff, exps))
        equations.append(terms)
    return PolySystem(n, equations)


def random_network(rng, m_max=5):
    """ Two species network on distinct complexes of order at most 4,
    rates in [1, 5]
    """
    pool = [(a, b) for a in range(3) for b in range(3)]
    m = int(rng.integers(3, m_max + 1))
    complexes = [pool[k] for k in rng.choice(len(pool), size=m, replace=False)]
    reactions = []
    for j in range(m):
        for i in range(m):
            if i != j and rng.random() < 0.3:
                reactions.append((j, i, float(rng.uniform(1.0, 5.0))))
    if not reactions:
        reactions.append((0, 1, 1.0))
    return Network(['X1', 'X2'], complexes, reactions)


# ============================================================================
def random_binary_model(rng, num):
    model = MilpModel('binary-{0}'.format(num))
    size = int(rng.integers(1, 11))
    ids = [model.add_binary('x{0}'.format(k)) for k in range(size)]
    for _ in range(int(rng.integers(1, 5))):
        coeffs = rng.integers(-5, 6, size=size).tolist()
        relation = Relation.LE if rng.random() < 0.7 else Relation.GE
        model.add_constraint(
            list(zip(ids, coeffs)), relation, float(rng.integers(-3, 8))
        )
    model.set_objective(list(zip(ids, rng.integers(-6, 7, size=size).tolist())))
    return model


def random_mixed_model(rng, num):
    """ Fixed charge covering: y_k <= 10 d_k, sum y >= demand
    """
    model = MilpModel('mixed-{0}'.format(num))
    size = int(rng.integers(1, 7))
    on = [model.add_binary('d{0}'.format(k)) for k in range(size)]
    amount = [
        model.add_variable('y{0}'.format(k), lower=0.0, upper=10.0) for k in range(size)
    ]
    for d, y in zip(on, amount):
        model.add_constraint([(y, 1.0), (d, -10.0)], Relation.LE, 0.0)
    demand = float(rng.uniform(1.0, 10.0 * size))
    model.add_constraint([(y, 1.0) for y in amount], Relation.GE, demand)

    objective = [(d, float(rng.integers(1, 20))) for d in on]
    objective += [(y, float(rng.uniform(0.5, 2.0))) for y in amount]
    model.set_objective(objective)
    return model
