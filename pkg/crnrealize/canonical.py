from __future__ import annotations

import math
import re
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import InadmissibleError, NetworkError, NetworkParseError
from .network import Complex, Network, build_Ak, build_Y
from .schema import MonomialDocument, PolySystemDocument
from .utils import get_logger, load_json

__all__ = [
    'Monomial',
    'PolySystem',
    'align_complexes',
    'canonical_realization',
    'complexes_union',
    'evaluate',
    'load_polysystem',
    'parse_polysystem',
    'polysystem_from_json',
    'polysystem_from_network',
    'polysystem_to_json',
    'render_polysystem',
]

logger = get_logger('canonical')

Exponents = Tuple[int, ...]
Realization = Tuple[Network, np.ndarray, np.ndarray]


# ============================================================================
class Monomial(NamedTuple):
    coeff: float
    exponents: Exponents

    @property
    def degree(self) -> int:
        return sum(self.exponents)


def graded_key(exponents: Exponents) -> Tuple[int, Exponents]:
    return sum(exponents), tuple(exponents)


# ============================================================================
class PolySystem:
    """Polynomial vector field dx_i/dt = sum of monomials, one equation
    per species.

    Monomials with equal exponent vectors are merged, zero coefficients
    dropped, and each equation is kept in graded order. Construction fails
    on kinetically inadmissible input (a negative monomial in equation i
    that does not contain x_i).
    """

    __slots__ = ['n', 'equations']

    def __init__(
        self,
        n: int,
        equations: Sequence[Iterable[Tuple[float, Sequence[int]]]] = (),
        lines: Optional[Sequence[int]] = None,
    ) -> None:
        if n < 0:
            raise NetworkError(f'species count must be nonnegative, got {n}')
        if len(equations) > n:
            raise NetworkError(f'{len(equations)} equations for {n} species')

        self.n = n
        merged_equations = []
        for num in range(n):
            merged: Dict[Exponents, float] = {}
            terms = equations[num] if num < len(equations) else ()
            for coeff, exponents in terms:
                exps = tuple(int(p) for p in exponents)
                if len(exps) != n or any(p < 0 for p in exps):
                    raise NetworkError(
                        f'equation {num + 1}: invalid exponent vector {exps}'
                    )
                if not math.isfinite(coeff):
                    raise NetworkError(f'equation {num + 1}: non-finite coefficient')
                merged[exps] = merged.get(exps, 0.0) + float(coeff)

            monomials = []
            for exps in sorted(merged, key=graded_key):
                coeff = merged[exps]
                if coeff == 0:
                    continue
                if coeff < 0 and exps[num] == 0:
                    line = lines[num] if lines else 0
                    raise InadmissibleError(
                        f'equation for x{num + 1} is not kinetic: negative monomial '
                        f'{_format_monomial(Monomial(coeff, exps))} does not '
                        f'contain x{num + 1}',
                        equation=num + 1,
                        exponents=exps,
                        line=line,
                    )
                monomials.append(Monomial(coeff, exps))
            merged_equations.append(tuple(monomials))

        self.equations: Tuple[Tuple[Monomial, ...], ...] = tuple(merged_equations)

    def monomials(self) -> List[Exponents]:
        """Distinct exponent vectors over all equations, graded order"""
        return sorted(
            {mono.exponents for eq in self.equations for mono in eq}, key=graded_key
        )

    def term_count(self) -> int:
        return sum(len(eq) for eq in self.equations)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PolySystem):
            return NotImplemented
        return self.n == other.n and self.equations == other.equations

    def __repr__(self) -> str:
        return f'<PolySystem n={self.n} terms={self.term_count()}>'


# ============================================================================
class _Token(NamedTuple):
    kind: str
    value: str
    column: int


_TOKEN_RE = re.compile(
    r'\s*(?:'
    r'(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)'
    r'|(?P<var>[xX]\d+)'
    r'|(?P<pow>\*\*|\^)'
    r'|(?P<op>[-+*])'
    r')'
)

_LHS_RE = re.compile(r"\s*[xX](\d+)\s*'\s*=")


def _tokenize(text: str, offset: int, lineno: int) -> List[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        if not text[pos:].strip():
            break
        match = _TOKEN_RE.match(text, pos)
        if not match or match.end() == pos:
            column = offset + pos + len(text[pos:]) - len(text[pos:].lstrip()) + 1
            raise NetworkParseError(
                f'unexpected character "{text[pos:].strip()[0]}"', lineno, column
            )
        kind = match.lastgroup
        value = match.group(kind)
        tokens.append(_Token(kind, value, offset + match.start(kind) + 1))
        pos = match.end()
    return tokens


def _parse_rhs(
    tokens: List[_Token], lineno: int
) -> List[Tuple[float, Dict[int, int], int]]:
    terms = []
    i = 0
    first = True
    while i < len(tokens):
        tok = tokens[i]
        sign = 1.0
        if tok.kind == 'op' and tok.value in '+-':
            sign = -1.0 if tok.value == '-' else 1.0
            i += 1
        elif not first:
            raise NetworkParseError("expected '+' or '-'", lineno, tok.column)
        first = False

        column = tokens[i].column if i < len(tokens) else tok.column
        coeff = 1.0
        powers: Dict[int, int] = {}
        seen_factor = False
        after_star = False
        while i < len(tokens):
            tok = tokens[i]
            if tok.kind == 'op' and tok.value == '*':
                if not seen_factor or after_star:
                    raise NetworkParseError("unexpected '*'", lineno, tok.column)
                after_star = True
                i += 1
                continue

            if tok.kind == 'op':
                break

            if tok.kind == 'number':
                coeff *= float(tok.value)
                i += 1
            elif tok.kind == 'var':
                idx = int(tok.value[1:])
                if idx < 1:
                    raise NetworkParseError('species are numbered from 1', lineno, tok.column)
                i += 1
                power = 1
                if i < len(tokens) and tokens[i].kind == 'pow':
                    i += 1
                    if i == len(tokens):
                        raise NetworkParseError('missing exponent', lineno, tokens[-1].column)
                    exp_tok = tokens[i]
                    if exp_tok.kind == 'op' and exp_tok.value == '-':
                        raise NetworkParseError(
                            'negative exponent', lineno, exp_tok.column
                        )
                    if exp_tok.kind != 'number' or not exp_tok.value.isdigit():
                        raise NetworkParseError(
                            f'non-integer exponent "{exp_tok.value}"',
                            lineno,
                            exp_tok.column,
                        )
                    power = int(exp_tok.value)
                    i += 1
                powers[idx] = powers.get(idx, 0) + power
            else:
                raise NetworkParseError(
                    f'unexpected "{tok.value}"', lineno, tok.column
                )
            seen_factor = True
            after_star = False

        if after_star or not seen_factor:
            column = tokens[i - 1].column if i else column
            raise NetworkParseError('incomplete monomial', lineno, column)
        terms.append((sign * coeff, powers, column))
    return terms


def parse_polysystem(text: str) -> PolySystem:
    """Parses the ODE file format

    One equation per line, ``x<i>' = <monomials>``. A monomial is an
    optional coefficient followed by factors ``x<j>`` with optional
    integer powers (``^p`` or ``**p``), factors separated by ``*`` or
    whitespace. ``#`` starts a comment. Species missing a line have a
    zero right hand side.

    :param text: The ODE file contents
    :return: The merged polynomial system
    """
    raw_equations: Dict[int, List[Tuple[float, Dict[int, int], int]]] = {}
    lines: Dict[int, int] = {}
    n = 0

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split('#', 1)[0]
        if not line.strip():
            continue

        match = _LHS_RE.match(line)
        if not match:
            column = len(line) - len(line.lstrip()) + 1
            raise NetworkParseError("expected \"x<i>' = ...\"", lineno, column)

        idx = int(match.group(1))
        if idx < 1:
            raise NetworkParseError('species are numbered from 1', lineno, match.start(1) + 1)
        if idx in raw_equations:
            raise NetworkParseError(
                f'duplicate equation for x{idx} (first given on line {lines[idx]})',
                lineno,
                match.start(1) + 1,
            )

        tokens = _tokenize(line[match.end() :], match.end(), lineno)
        terms = _parse_rhs(tokens, lineno)
        raw_equations[idx] = terms
        lines[idx] = lineno
        n = max([n, idx] + [j for _, powers, _ in terms for j in powers])

    equations = []
    for idx in range(1, n + 1):
        monomials = []
        for coeff, powers, _ in raw_equations.get(idx, []):
            monomials.append((coeff, [powers.get(j, 0) for j in range(1, n + 1)]))
        equations.append(monomials)

    return PolySystem(n, equations, [lines.get(idx, 0) for idx in range(1, n + 1)])


def load_polysystem(text: str) -> PolySystem:
    """Reads either the ODE file format or its JSON form"""
    if text.lstrip().startswith('{'):
        return polysystem_from_json(load_json(text))
    return parse_polysystem(text)


# ============================================================================
def _format_monomial(mono: Monomial, with_sign: bool = True) -> str:
    factors = []
    for num, power in enumerate(mono.exponents):
        if power == 1:
            factors.append(f'x{num + 1}')
        elif power:
            factors.append(f'x{num + 1}^{power}')

    coeff = abs(mono.coeff) if not with_sign else mono.coeff
    if not factors:
        return repr(coeff)
    if coeff == 1:
        return '*'.join(factors)
    if coeff == -1:
        return '-' + '*'.join(factors)
    return '*'.join([repr(coeff)] + factors)


def render_polysystem(sys: PolySystem) -> str:
    """Writes the ODE file format, coefficients printed exactly"""
    lines = []
    for num, eq in enumerate(sys.equations):
        parts = []
        for mono in eq:
            body = _format_monomial(mono, with_sign=False)
            if not parts:
                parts.append(('-' if mono.coeff < 0 else '') + body)
            else:
                parts.append(('- ' if mono.coeff < 0 else '+ ') + body)
        lines.append(f"x{num + 1}' = " + (' '.join(parts) or '0'))
    return '\n'.join(lines) + '\n'


def polysystem_to_json(sys: PolySystem) -> PolySystemDocument:
    return PolySystemDocument(
        n=sys.n,
        equations=[
            [
                MonomialDocument(coefficient=mono.coeff, exponents=list(mono.exponents))
                for mono in eq
            ]
            for eq in sys.equations
        ],
    )


def polysystem_from_json(doc: Union[PolySystemDocument, dict]) -> PolySystem:
    if not isinstance(doc, PolySystemDocument):
        doc = PolySystemDocument.parse_obj(doc)
    return PolySystem(
        doc.n,
        [[(mono.coefficient, mono.exponents) for mono in eq] for eq in doc.equations],
    )


def evaluate(sys: PolySystem, x: Sequence[float]) -> np.ndarray:
    """Evaluates the right hand side at the point x"""
    x = np.asarray(x, dtype=float)
    if x.shape != (sys.n,):
        raise NetworkError(f'point has shape {x.shape}, expected ({sys.n},)')
    return np.array(
        [
            sum(mono.coeff * float(np.prod(x ** np.array(mono.exponents))) for mono in eq)
            for eq in sys.equations
        ],
        dtype=float,
    )


# ============================================================================
def _species_names(n: int) -> List[str]:
    return [f'X{num + 1}' for num in range(n)]


def _realization(net: Network) -> Realization:
    Y = build_Y(net)
    return net, Y, Y @ build_Ak(net)


def canonical_realization(sys: PolySystem) -> Realization:
    """Builds the canonical mass-action network of a kinetic polynomial system.

    Every monomial x^a with coefficient b in equation i yields the reaction
    a -> a + sign(b) e_i with rate |b|. Complexes are numbered sources first
    (graded order) then products in order of first emission.

    :param sys: A kinetically admissible system
    :return: The network, its Y matrix and M = Y . A_k
    """
    sources = sys.monomials()
    complexes: List[Exponents] = list(sources)
    index = {cplx: num for num, cplx in enumerate(complexes)}
    rates: Dict[Tuple[int, int], float] = {}

    by_source: Dict[Exponents, List[Tuple[int, float]]] = {}
    for num, eq in enumerate(sys.equations):
        for mono in eq:
            by_source.setdefault(mono.exponents, []).append((num, mono.coeff))

    for source in sources:
        for num, coeff in by_source[source]:
            target = list(source)
            target[num] += 1 if coeff > 0 else -1
            product = tuple(target)
            if product not in index:
                index[product] = len(complexes)
                complexes.append(product)
            key = (index[source], index[product])
            rates[key] = rates.get(key, 0.0) + abs(coeff)

    net = Network(
        _species_names(sys.n),
        complexes,
        [(src, dst, rate) for (src, dst), rate in rates.items()],
    )
    logger.debug(
        'canonical realization: %d complexes, %d reactions', net.m, len(net.reactions)
    )
    return _realization(net)


def complexes_union(
    net: Network, extra: Iterable[Sequence[int]], strict: bool = True
) -> Realization:
    """Appends extra complexes to the complex set

    :param net: The network to extend
    :param extra: Coefficient vectors of the new complexes
    :param strict: Raise on a complex already present, otherwise skip it
    :return: The extended network, Y and M (new columns of M are zero)
    """
    added: List[Exponents] = []
    for cplx in extra:
        coeffs = tuple(int(a) for a in cplx)
        if len(coeffs) != net.n:
            raise NetworkError(
                f'complex {coeffs} has {len(coeffs)} coefficients, expected {net.n}'
            )
        if net.complex_index(coeffs) is not None or coeffs in added:
            if strict:
                raise NetworkError(
                    f'duplicate complex {Complex(coeffs).formula(net.species_names)}'
                )
            continue
        added.append(coeffs)
    return _realization(net.with_complexes(added))


def align_complexes(net: Network, order: Iterable[Sequence[int]]) -> Realization:
    """Renumbers complexes so the given ones come first, in the given
    order, followed by the remaining complexes in their current order.
    Listed complexes the network lacks are added as unused complexes.
    """
    front = [tuple(int(a) for a in cplx) for cplx in order]
    if len(set(front)) != len(front):
        raise NetworkError('complex order lists a complex twice')

    current = [c.coeffs for c in net.complexes]
    listed = set(front)
    complexes = front + [c for c in current if c not in listed]
    position = {cplx: num for num, cplx in enumerate(complexes)}

    reactions = [
        (position[current[r.source]], position[current[r.target]], r.rate)
        for r in net.reactions
    ]
    return _realization(Network(net.species_names, complexes, reactions))


def polysystem_from_network(net: Network) -> PolySystem:
    """The mass-action polynomial vector field Y . A_k . Psi(x) of a network"""
    equations: List[List[Tuple[float, Exponents]]] = [[] for _ in range(net.n)]
    for react in net.reactions:
        source = net.complexes[react.source].coeffs
        target = net.complexes[react.target].coeffs
        for num in range(net.n):
            change = target[num] - source[num]
            if change:
                equations[num].append((react.rate * change, source))
    return PolySystem(net.n, equations)
