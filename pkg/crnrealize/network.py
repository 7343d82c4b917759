from __future__ import annotations

import math
import re
from typing import (
    Dict,
    Iterable,
    List,
    NamedTuple,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np
import pydot
import sympy

from .errors import NetworkError, NetworkParseError, PreconditionError
from .graph import (
    Edge,
    connected_components,
    leaving_edges,
    strongly_connected_components,
    terminal_components,
)
from .schema import NetworkDocument, ReactionDocument
from .utils import parse_number

__all__ = [
    'Complex',
    'LinkagePartition',
    'Network',
    'Reaction',
    'Species',
    'build_Ak',
    'build_Y',
    'complex_from_formula',
    'deficiency',
    'deficiency_zero_report',
    'is_weakly_reversible',
    'linkage_classes',
    'mass_action',
    'network_from_json',
    'network_from_matrices',
    'network_to_dot',
    'network_to_json',
    'parse_network',
    'render_network',
    'rhs',
    'strong_linkage_classes',
]

MATRIX_TOL = 1e-9

_NAME_RE = re.compile(r'[A-Za-z_][A-Za-z0-9_]*$')
_TERM_RE = re.compile(r'(?:(\d+)\s*\*?\s*)?([A-Za-z_][A-Za-z0-9_]*)$')


# ============================================================================
class Species(NamedTuple):
    index: int
    name: str


class Complex(NamedTuple):
    coeffs: Tuple[int, ...]

    @property
    def is_zero(self) -> bool:
        return not any(self.coeffs)

    @property
    def order(self) -> int:
        return sum(self.coeffs)

    def formula(self, names: Sequence[str]) -> str:
        """Human readable form, e.g. ``X1 + 2 X2``, ``0`` for the zero complex"""
        terms = []
        for coeff, name in zip(self.coeffs, names):
            if coeff == 1:
                terms.append(name)
            elif coeff:
                terms.append(f'{coeff} {name}')
        return ' + '.join(terms) or '0'


class Reaction(NamedTuple):
    """Reaction between 0-based complex indices"""

    source: int
    target: int
    rate: float


class LinkagePartition(NamedTuple):
    classes: List[Tuple[int, ...]]

    @property
    def count(self) -> int:
        return len(self.classes)


# ============================================================================
class Network:
    """A reaction network (S, C, R) with mass-action rate constants.

    Instances are immutable after construction. Complex and reaction
    indices are 0-based in code; the file formats and reports use
    1-based numbering (C1, C2, ...).
    """

    __slots__ = ['species', 'complexes', 'reactions', '_complex_index', '_rates']

    def __init__(
        self,
        species: Sequence[str],
        complexes: Iterable[Sequence[int]] = (),
        reactions: Iterable[Tuple[int, int, float]] = (),
    ) -> None:
        names = [str(name) for name in species]
        if len(set(names)) != len(names):
            raise NetworkError(f'duplicate species names in {names}')

        self.species: Tuple[Species, ...] = tuple(
            Species(num + 1, name) for num, name in enumerate(names)
        )

        self.complexes: Tuple[Complex, ...] = tuple(
            Complex(tuple(int(a) for a in coeffs)) for coeffs in complexes
        )
        self._complex_index: Dict[Tuple[int, ...], int] = {}
        for num, cplx in enumerate(self.complexes):
            if len(cplx.coeffs) != len(names):
                raise NetworkError(
                    f'complex C{num + 1} has {len(cplx.coeffs)} coefficients, '
                    f'expected {len(names)}'
                )
            if any(a < 0 for a in cplx.coeffs):
                raise NetworkError(f'complex C{num + 1} has a negative coefficient')
            if cplx.coeffs in self._complex_index:
                raise NetworkError(
                    f'complex C{num + 1} duplicates '
                    f'C{self._complex_index[cplx.coeffs] + 1}'
                )
            self._complex_index[cplx.coeffs] = num

        self._rates: Dict[Edge, float] = {}
        checked = []
        for src, dst, rate in reactions:
            src, dst, rate = int(src), int(dst), float(rate)
            if not (0 <= src < self.m and 0 <= dst < self.m):
                raise NetworkError(f'reaction {src + 1} -> {dst + 1} out of range')
            if src == dst:
                raise NetworkError(f'reaction C{src + 1} -> C{dst + 1} is a self loop')
            if not rate > 0 or not math.isfinite(rate):
                raise NetworkError(
                    f'reaction C{src + 1} -> C{dst + 1} has nonpositive rate {rate}'
                )
            if (src, dst) in self._rates:
                raise NetworkError(f'duplicate reaction C{src + 1} -> C{dst + 1}')
            self._rates[(src, dst)] = rate
            checked.append(Reaction(src, dst, rate))

        self.reactions: Tuple[Reaction, ...] = tuple(checked)

    @property
    def n(self) -> int:
        return len(self.species)

    @property
    def m(self) -> int:
        return len(self.complexes)

    @property
    def species_names(self) -> List[str]:
        return [sp.name for sp in self.species]

    @property
    def edges(self) -> List[Edge]:
        return [(r.source, r.target) for r in self.reactions]

    def complex_index(self, coeffs: Sequence[int]) -> Optional[int]:
        return self._complex_index.get(tuple(int(a) for a in coeffs))

    def rate(self, source: int, target: int) -> float:
        return self._rates.get((source, target), 0.0)

    def used_complexes(self) -> List[int]:
        """Indices of complexes incident to at least one reaction"""
        used = set()
        for src, dst in self._rates:
            used.add(src)
            used.add(dst)
        return sorted(used)

    def formula(self, index: int) -> str:
        return self.complexes[index].formula(self.species_names)

    def with_complexes(self, extra: Iterable[Sequence[int]]) -> Network:
        """Returns a network with the extra complexes appended"""
        complexes = [c.coeffs for c in self.complexes] + [tuple(c) for c in extra]
        return Network(self.species_names, complexes, self.reactions)

    def with_reactions(self, reactions: Iterable[Tuple[int, int, float]]) -> Network:
        return Network(
            self.species_names, [c.coeffs for c in self.complexes], reactions
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Network):
            return NotImplemented
        return (
            self.species == other.species
            and self.complexes == other.complexes
            and self.reactions == other.reactions
        )

    def __hash__(self) -> int:
        return hash((self.species, self.complexes, self.reactions))

    def __repr__(self) -> str:
        return f'<Network n={self.n} m={self.m} reactions={len(self.reactions)}>'


# ============================================================================
class _Parser:
    """Line oriented reader for the reaction file format"""

    def __init__(self) -> None:
        self.names: List[str] = []
        self.name_index: Dict[str, int] = {}
        self.complexes: List[Dict[int, int]] = []
        self.complex_keys: Dict[Tuple[Tuple[int, int], ...], int] = {}
        self.reactions: List[Tuple[int, int, float]] = []
        self.pairs: Dict[Edge, int] = {}

    def add_species(self, name: str, lineno: int, column: int) -> int:
        if not _NAME_RE.match(name):
            raise NetworkParseError(f'invalid species name "{name}"', lineno, column)
        if name not in self.name_index:
            self.name_index[name] = len(self.names)
            self.names.append(name)
        return self.name_index[name]

    def parse_complex(self, text: str, lineno: int, offset: int) -> int:
        stripped = text.strip()
        if not stripped:
            raise NetworkParseError('missing complex', lineno, offset + 1)

        coeffs: Dict[int, int] = {}
        if stripped != '0':
            pos = 0
            for term in text.split('+'):
                column = offset + pos + len(term) - len(term.lstrip()) + 1
                pos += len(term) + 1
                term = term.strip()
                if not term:
                    raise NetworkParseError('empty term in complex', lineno, column)
                match = _TERM_RE.match(term)
                if not match:
                    raise NetworkParseError(f'invalid term "{term}"', lineno, column)
                coeff = int(match.group(1)) if match.group(1) else 1
                if coeff <= 0:
                    raise NetworkParseError(
                        f'coefficient must be positive in "{term}"', lineno, column
                    )
                idx = self.add_species(match.group(2), lineno, column)
                coeffs[idx] = coeffs.get(idx, 0) + coeff

        key = tuple(sorted(coeffs.items()))
        if key not in self.complex_keys:
            self.complex_keys[key] = len(self.complexes)
            self.complexes.append(coeffs)
        return self.complex_keys[key]

    def parse_pragma(self, line: str, lineno: int) -> None:
        body = line.strip()[2:]
        keyword, _, rest = body.partition(' ')
        offset = line.index(keyword) + len(keyword) + 1
        if keyword == 'species':
            pos = offset
            for name in re.split(r'[\s,]+', rest.strip()):
                if name:
                    self.add_species(name, lineno, line.find(name, pos) + 1)
                    pos = line.find(name, pos) + len(name)
        elif keyword == 'complex':
            self.parse_complex(rest, lineno, offset)
        # unknown pragmas are plain comments

    def parse_line(self, raw: str, lineno: int) -> None:
        if raw.lstrip().startswith('#!'):
            self.parse_pragma(raw, lineno)
            return

        line = raw.split('#', 1)[0]
        if not line.strip():
            return

        arrow = line.find('->')
        if arrow < 0:
            raise NetworkParseError("expected '->'", lineno, len(line.rstrip()) + 1)
        semi = line.find(';', arrow)
        if semi < 0:
            raise NetworkParseError(
                "expected '; <rate>' after the product complex",
                lineno,
                len(line.rstrip()) + 1,
            )

        src = self.parse_complex(line[:arrow], lineno, 0)
        dst = self.parse_complex(line[arrow + 2 : semi], lineno, arrow + 2)

        rate_text = line[semi + 1 :]
        column = semi + 2 + len(rate_text) - len(rate_text.lstrip())
        try:
            rate = parse_number(rate_text)
        except (ValueError, ZeroDivisionError):
            raise NetworkParseError(f'invalid rate "{rate_text.strip()}"', lineno, column)
        if not rate > 0 or not math.isfinite(rate):
            raise NetworkParseError(f'rate must be positive, got {rate}', lineno, column)
        if src == dst:
            raise NetworkParseError('source and product complex coincide', lineno, 1)
        if (src, dst) in self.pairs:
            raise NetworkParseError(
                f'duplicate reaction (first given on line {self.pairs[(src, dst)]})',
                lineno,
                1,
            )
        self.pairs[(src, dst)] = lineno
        self.reactions.append((src, dst, rate))

    def network(self) -> Network:
        n = len(self.names)
        complexes = []
        for coeffs in self.complexes:
            vec = [0] * n
            for idx, coeff in coeffs.items():
                vec[idx] = coeff
            complexes.append(vec)
        return Network(self.names, complexes, self.reactions)


def parse_network(text: str) -> Network:
    """Parses the reaction file format

    ``<complex> -> <complex> ; <rate>`` per line, ``#`` starts a comment.
    ``#!species A B`` and ``#!complex <complex>`` pragmas declare species
    and complexes ahead of the reactions (written by render_network so the
    species order and unused complexes survive a round trip).

    :param text: The reaction file contents
    :return: The network, complexes deduplicated in first-appearance order
    """
    parser = _Parser()
    for lineno, raw in enumerate(text.splitlines(), 1):
        parser.parse_line(raw, lineno)
    return parser.network()


def complex_from_formula(formula: str, species: Sequence[str]) -> Tuple[int, ...]:
    """Parses a single complex formula against a fixed species list

    :param formula: e.g. ``X1 + 2 X3`` or ``0``
    :param species: The species names of the network
    :return: The coefficient vector
    """
    parser = _Parser()
    for name in species:
        parser.add_species(name, 0, 0)
    parser.parse_complex(formula, 0, 0)
    if len(parser.names) != len(species):
        unknown = parser.names[len(species) :]
        raise NetworkError(f'unknown species {unknown} in complex "{formula}"')
    return tuple(parser.network().complexes[0].coeffs)


def render_network(net: Network) -> str:
    """Writes the reaction file format, inverse of parse_network"""
    lines = ['#!species ' + ' '.join(net.species_names)]
    for num in range(net.m):
        lines.append(f'#!complex {net.formula(num)}')
    for react in net.reactions:
        lines.append(
            f'{net.formula(react.source)} -> {net.formula(react.target)} ; {react.rate!r}'
        )
    return '\n'.join(lines) + '\n'


# ============================================================================
def network_to_json(net: Network) -> NetworkDocument:
    return NetworkDocument(
        species=net.species_names,
        complexes=[list(c.coeffs) for c in net.complexes],
        reactions=[
            ReactionDocument(src=r.source + 1, dst=r.target + 1, k=r.rate)
            for r in net.reactions
        ],
    )


def network_from_json(doc: Union[NetworkDocument, dict]) -> Network:
    if not isinstance(doc, NetworkDocument):
        doc = NetworkDocument.parse_obj(doc)
    return Network(
        doc.species,
        doc.complexes,
        [(r.src - 1, r.dst - 1, r.k) for r in doc.reactions],
    )


def network_to_dot(net: Network, name: str = 'network') -> str:
    """DOT digraph: one node per used complex, one edge per reaction
    labeled with its rate to 6 significant figures
    """
    dot = pydot.Dot(name, graph_type='digraph')
    for num in net.used_complexes():
        dot.add_node(pydot.Node(f'C{num + 1}', label=net.formula(num)))
    for react in net.reactions:
        dot.add_edge(
            pydot.Edge(
                f'C{react.source + 1}',
                f'C{react.target + 1}',
                label=f'{react.rate:.6g}',
            )
        )
    return dot.to_string()


def network_from_matrices(
    species: Sequence[str],
    complexes: Sequence[Sequence[int]],
    A: np.ndarray,
    tol: float = 0.0,
) -> Network:
    """Reads the reactions off a kinetics matrix, entry (i, j) > tol is C_j -> C_i"""
    A = np.asarray(A, dtype=float)
    m = len(complexes)
    reactions = [
        (j, i, float(A[i, j]))
        for j in range(m)
        for i in range(m)
        if i != j and A[i, j] > tol
    ]
    return Network(species, complexes, reactions)


# ============================================================================
def build_Y(net: Network) -> np.ndarray:
    """Stoichiometric matrix, column j holds complex j's coefficients"""
    if not net.m:
        return np.zeros((net.n, 0), dtype=int)
    return np.array([c.coeffs for c in net.complexes], dtype=int).T.reshape(
        net.n, net.m
    )


def build_Ak(net: Network) -> np.ndarray:
    """Kinetics matrix, [A_k]_{ij} = k_{ji} off the diagonal and the
    diagonal holds the negated column sums
    """
    A = np.zeros((net.m, net.m))
    for react in net.reactions:
        A[react.target, react.source] = react.rate
    for j in range(net.m):
        A[j, j] = -sum(A[i, j] for i in range(net.m) if i != j)
    return A


def mass_action(Y: np.ndarray, x: Sequence[float]) -> np.ndarray:
    """Psi_j(x) = prod_i x_i ** Y_ij"""
    Y = np.asarray(Y)
    x = np.asarray(x, dtype=float)
    if x.shape != (Y.shape[0],):
        raise NetworkError(f'concentration has shape {x.shape}, expected ({Y.shape[0]},)')
    if np.any(~(x > 0)):
        raise PreconditionError(f'concentrations must be positive, got {x.tolist()}')
    return np.prod(x[:, None] ** Y, axis=0)


def rhs(Y: np.ndarray, A_k: np.ndarray, x: Sequence[float]) -> np.ndarray:
    """dx/dt = Y . A_k . Psi(x)"""
    Y = np.asarray(Y)
    A_k = np.asarray(A_k, dtype=float)
    if A_k.shape != (Y.shape[1], Y.shape[1]):
        raise NetworkError(
            f'kinetics matrix has shape {A_k.shape}, Y has {Y.shape[1]} complexes'
        )
    return Y @ (A_k @ mass_action(Y, x))


# ============================================================================
GraphLike = Union[Network, np.ndarray]


def _graph(obj: GraphLike) -> Tuple[int, List[Edge]]:
    if isinstance(obj, Network):
        return obj.m, obj.edges
    A = np.asarray(obj, dtype=float)
    m = A.shape[0]
    edges = [
        (j, i) for j in range(m) for i in range(m) if i != j and A[i, j] > MATRIX_TOL
    ]
    return m, edges


def _used(edges: Iterable[Edge]) -> List[int]:
    return sorted({v for edge in edges for v in edge})


def linkage_classes(obj: GraphLike) -> LinkagePartition:
    """Undirected components over complexes incident to a reaction"""
    m, edges = _graph(obj)
    return LinkagePartition(connected_components(m, edges, _used(edges)))


def strong_linkage_classes(
    obj: GraphLike,
) -> Tuple[List[Tuple[int, ...]], List[Tuple[int, ...]]]:
    """Strongly connected components over the used complexes and the
    terminal ones among them
    """
    m, edges = _graph(obj)
    components = strongly_connected_components(m, edges, _used(edges))
    return components, terminal_components(components, edges)


def is_weakly_reversible(obj: GraphLike) -> Tuple[bool, List[Edge]]:
    """True iff every linkage class is strongly connected.

    A network with no reactions is weakly reversible (vacuously).

    :return: the verdict and the edges leaving their strongly connected
    component (empty when weakly reversible)
    """
    m, edges = _graph(obj)
    components = strongly_connected_components(m, edges, _used(edges))
    witness = leaving_edges(components, edges)
    return not witness, witness


def _stoichiometric_rank(Y: np.ndarray, edges: Sequence[Edge]) -> int:
    if not edges:
        return 0
    rows = [[int(Y[s, dst] - Y[s, src]) for s in range(Y.shape[0])] for src, dst in edges]
    return int(sympy.Matrix(rows).rank())


def deficiency(net: Network) -> int:
    """m' - l - s over the complexes used by the reactions"""
    edges = net.edges
    used = _used(edges)
    ell = linkage_classes(net).count
    s = _stoichiometric_rank(build_Y(net), edges)
    return len(used) - ell - s


def deficiency_zero_report(net: Network) -> Dict[str, object]:
    """Weak reversibility and deficiency, and whether both hypotheses of
    the Deficiency Zero Theorem hold for the network
    """
    wr, witness = is_weakly_reversible(net)
    delta = deficiency(net)
    return {
        'weakly_reversible': wr,
        'witness': [[src + 1, dst + 1] for src, dst in witness],
        'deficiency': delta,
        'linkage_classes': [[v + 1 for v in cls] for cls in linkage_classes(net).classes],
        'deficiency_zero_theorem': bool(wr and delta == 0),
    }
