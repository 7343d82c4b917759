from __future__ import annotations

import os
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import yaml

from .bnb import solve_milp
from .canonical import (
    align_complexes,
    canonical_realization,
    complexes_union,
    parse_polysystem,
    polysystem_from_json,
)
from .conjugacy import (
    ConjugacyResult,
    check_target_conjugacy,
    conjugacy_result,
    trajectory_check,
)
from .encoder import (
    DEFAULT_EPSILON,
    DEFAULT_UBOUND,
    DecodedRealization,
    EncodedModel,
    RealizationProblem,
    build_model,
    decode,
    prefer_unit_scaling,
)
from .errors import (
    EXIT_FAILURE,
    EXIT_INFEASIBLE,
    EXIT_LIMIT,
    EXIT_OK,
    ModelError,
    NetworkError,
)
from .milp import Solution, export_lp_file, import_solution
from .network import (
    Network,
    build_Ak,
    complex_from_formula,
    deficiency,
    linkage_classes,
    network_from_json,
    network_from_matrices,
    network_to_dot,
    network_to_json,
    parse_network,
    render_network,
)
from .schema import (
    MilpConfig,
    RealizationConfig,
    RealizationDocument,
    SolutionDocument,
    SolverKind,
    SolveStatus,
    VerificationReport,
)
from .utils import dump_json, env, get_logger, load_json, parse_number
from .verify import audit_solution, ensure_audit, kernel_vector, published_realization

__all__ = ['RealizationManager', 'RealizationResult', 'VerificationResult']

logger = get_logger('realize')

ODE_EXTENSIONS = ('.ode', '.odes')
SOLUTION_EXTENSIONS = ('.yaml', '.yml')

_STATUS_EXIT_CODES = {
    SolveStatus.OPTIMAL: EXIT_OK,
    SolveStatus.INFEASIBLE: EXIT_INFEASIBLE,
    SolveStatus.UNBOUNDED: EXIT_FAILURE,
    SolveStatus.TIME_LIMIT: EXIT_LIMIT,
}


# ============================================================================
class RealizationResult(NamedTuple):
    """Everything produced by one realization run"""

    config: RealizationConfig
    problem: RealizationProblem
    encoded: EncodedModel
    solution: Solution
    decoded: Optional[DecodedRealization]
    conjugate: Optional[ConjugacyResult]
    network: Optional[Network]
    document: RealizationDocument

    @property
    def exit_code(self) -> int:
        return _STATUS_EXIT_CODES[self.solution.status]


class VerificationResult(NamedTuple):
    problem: RealizationProblem
    decoded: DecodedRealization
    report: VerificationReport


# ============================================================================
class RealizationManager:
    """Runs realization problems end to end: loads networks and problem
    configurations, encodes, solves, decodes, transforms back to the
    original coordinates and verifies every result before it is returned
    """

    def __init__(self) -> None:
        self.epsilon: float = env('CRNREALIZE_EPSILON', type_=float, default=DEFAULT_EPSILON)
        self.ubound: float = env('CRNREALIZE_UBOUND', type_=float, default=DEFAULT_UBOUND)
        self.time_limit: float = env('CRNREALIZE_TIME_LIMIT', type_=float, default=600.0)
        self.node_limit: int = env('CRNREALIZE_NODE_LIMIT', type_=int, default=200000)
        self.seed: int = env('CRNREALIZE_SEED', type_=int, default=42)
        self.sample_count: int = 100

    # configuration
    def load_config(self, text: str) -> RealizationConfig:
        """Parses a JSON or YAML problem configuration"""
        data = yaml.safe_load(text) or {}
        return RealizationConfig.parse_obj(data)

    def resolve(self, config: Optional[RealizationConfig] = None, **overrides) -> RealizationConfig:
        """Fills unset values from the environment defaults, then applies
        the overrides that are not None
        """
        data = (config or RealizationConfig()).dict()
        data.update({key: val for key, val in overrides.items() if val is not None})
        defaults = {
            'epsilon': self.epsilon,
            'u': self.ubound,
            'time_limit': self.time_limit,
            'node_limit': self.node_limit,
            'seed': self.seed,
        }
        for key, val in defaults.items():
            if data.get(key) is None:
                data[key] = val
        return RealizationConfig.parse_obj(data)

    # input
    def load_network(self, path: str, text: Optional[str] = None) -> Network:
        """Reads a reaction file, an ODE file (canonical realization) or a
        JSON network or polynomial system document
        """
        if text is None:
            with open(path, 'rt') as fh:
                text = fh.read()

        ext = os.path.splitext(path)[1].lower()
        if ext == '.json':
            data = load_json(text)
            if isinstance(data, dict) and 'equations' in data:
                return canonical_realization(polysystem_from_json(data))[0]
            return network_from_json(data)
        if ext in ODE_EXTENSIONS:
            return canonical_realization(parse_polysystem(text))[0]
        if ext in SOLUTION_EXTENSIONS:
            return self.solution_network(self.load_solution(text))
        return parse_network(text)

    @staticmethod
    def solution_network(candidate: SolutionDocument) -> Network:
        if isinstance(candidate.network, str):
            return parse_network(candidate.network)
        return network_from_json(candidate.network)

    def parse_complexes(self, text: str, species: Sequence[str]) -> List[Tuple[int, ...]]:
        """One complex formula per line, '#' starts a comment"""
        complexes = []
        for raw in text.splitlines():
            line = raw.split('#', 1)[0].strip()
            if line:
                complexes.append(complex_from_formula(line, species))
        return complexes

    def load_bounds(self, value: str) -> Any:
        """A scalar bound, or the path of a YAML/JSON m x m matrix"""
        if os.path.isfile(value):
            with open(value, 'rt') as fh:
                matrix = yaml.safe_load(fh)
            if not isinstance(matrix, list):
                raise ModelError(f'{value}: expected a matrix of upper bounds')
            return [[parse_number(x) for x in row] for row in matrix]
        return parse_number(value)

    def prepare(
        self,
        net: Network,
        config: RealizationConfig,
        order: Optional[Sequence[Sequence[int]]] = None,
    ) -> Network:
        """Applies the complex numbering and the extra complexes of the
        config to the input network
        """
        if order:
            net = align_complexes(net, order)[0]
        if config.complexes:
            extra = [complex_from_formula(f, net.species_names) for f in config.complexes]
            net = complexes_union(net, extra, strict=False)[0]
        return net

    def build_problem(self, net: Network, config: RealizationConfig) -> RealizationProblem:
        return RealizationProblem.from_network(
            net,
            objective=config.objective,
            weakly_reversible=config.weakly_reversible,
            conjugacy=config.conjugacy,
            epsilon=config.epsilon if config.epsilon is not None else self.epsilon,
            epsilon_c=config.epsilon_c,
            u=config.u if config.u is not None else self.ubound,
        )

    def export_model(self, net: Network, config: RealizationConfig) -> str:
        """LP file of the encoded problem, for an external solver"""
        return export_lp_file(build_model(self.build_problem(net, config)).model)

    # pipeline
    def solve(
        self,
        encoded: EncodedModel,
        config: RealizationConfig,
        solution_text: Optional[str] = None,
    ) -> Solution:
        if config.solver == SolverKind.LPFILE:
            if solution_text is None:
                raise ModelError('the lpfile solver needs the external solver\'s solution')
            logger.info('importing external solution for %s', encoded.model.name)
            return import_solution(encoded.model.freeze(), solution_text)

        milp_config = MilpConfig(
            time_limit=config.time_limit if config.time_limit is not None else self.time_limit,
            node_limit=config.node_limit if config.node_limit is not None else self.node_limit,
        )
        solution = solve_milp(encoded.model, milp_config)
        # equally sparse (dense) realizations differ in c, prefer c closest to 1
        return prefer_unit_scaling(encoded, solution, milp_config.time_limit)

    def realize(
        self,
        net: Network,
        config: RealizationConfig,
        solution_text: Optional[str] = None,
        trajectory: bool = False,
    ) -> RealizationResult:
        """Finds and verifies a realization of the network's dynamics

        :param net: The input network (complexes already prepared)
        :param config: The resolved problem configuration
        :param solution_text: External solver output for the lpfile solver
        :param trajectory: Also compare integrated trajectories (advisory)
        :raises AuditError: The solution found failed verification
        """
        problem = self.build_problem(net, config)
        logger.info('realizing %s', problem.describe())
        encoded = build_model(problem)
        logger.info('encoded %r', encoded.model)

        solution = self.solve(encoded, config, solution_text)
        logger.info(
            'solver finished: %s, objective %s, %d nodes',
            solution.status.value,
            solution.objective_value,
            solution.nodes,
        )

        document = RealizationDocument(
            name=config.name or '',
            status=solution.status,
            objective=problem.objective,
            weakly_reversible=problem.weakly_reversible,
            conjugacy=problem.conjugacy,
            epsilon=problem.epsilon,
            epsilon_c=problem.epsilon_c,
            u=config.u,
            objective_value=solution.objective_value,
            nodes=solution.nodes,
        )
        if not solution.has_values:
            return RealizationResult(
                config, problem, encoded, solution, None, None, None, document
            )

        decoded = decode(solution, encoded.var_map, problem)
        conjugate = conjugacy_result(decoded.A_b, decoded.c, problem.Y)
        seed = config.seed if config.seed is not None else self.seed
        report = self._verification(
            problem, decoded, conjugate, seed, build_Ak(net), trajectory
        )
        ensure_audit(report.audit)

        realized = network_from_matrices(problem.species, problem.complexes, conjugate.A_k_prime)
        self._describe(document, decoded, conjugate, realized, report)
        logger.info('verified %d-reaction realization', decoded.num_reactions)
        return RealizationResult(
            config, problem, encoded, solution, decoded, conjugate, realized, document
        )

    def _verification(
        self,
        problem: RealizationProblem,
        decoded: DecodedRealization,
        conjugate: ConjugacyResult,
        seed: int,
        A_given: Optional[np.ndarray] = None,
        trajectory: bool = False,
    ) -> VerificationReport:
        audit = audit_solution(problem, decoded, self.sample_count, seed)
        conj = check_target_conjugacy(
            problem.Y, problem.M, conjugate.A_k_prime, decoded.c, self.sample_count, seed
        )
        traj = None
        if trajectory and A_given is not None:
            traj = trajectory_check(
                problem.Y, A_given, conjugate.A_k_prime, decoded.c, np.ones(problem.n)
            )
        return VerificationReport(
            passed=audit.passed and conj.passed, audit=audit, conjugacy=conj, trajectory=traj
        )

    def _describe(
        self,
        document: RealizationDocument,
        decoded: DecodedRealization,
        conjugate: ConjugacyResult,
        realized: Network,
        report: VerificationReport,
    ) -> None:
        document.num_reactions = decoded.num_reactions
        document.network = network_to_json(realized)
        document.c = decoded.c.tolist()
        document.t = decoded.t.tolist()
        document.a_b = decoded.A_b.tolist()
        document.a_k_prime = conjugate.A_k_prime.tolist()
        if decoded.a_tilde is not None:
            document.a_tilde = decoded.a_tilde.tolist()
            document.b = decoded.b.tolist()
            kernel = kernel_vector(conjugate.A_k_prime)
            document.kernel = kernel.tolist() if kernel is not None else []
        document.deficiency = deficiency(realized)
        document.linkage_classes = [
            [v + 1 for v in cls] for cls in linkage_classes(realized).classes
        ]
        document.verification = report

    # verification of given solutions
    def load_solution(self, text: str) -> SolutionDocument:
        return SolutionDocument.parse_obj(yaml.safe_load(text) or {})

    def verify(
        self,
        net: Network,
        candidate: SolutionDocument,
        config: Optional[RealizationConfig] = None,
        seed: Optional[int] = None,
        trajectory: bool = False,
    ) -> VerificationResult:
        """Audits a candidate realization of the network's dynamics.

        The candidate's complexes are matched to the network's by
        composition; complexes only the candidate has are added with zero
        dynamics. Settings the config leaves unset come from the candidate.
        """
        cand = self._reorder_species(self.solution_network(candidate), net.species_names)
        net = complexes_union(net, [c.coeffs for c in cand.complexes], strict=False)[0]

        settings = candidate.dict(exclude={'network', 'c'})
        if config is not None:
            given = config.dict(exclude_unset=True)
            settings.update({key: val for key, val in given.items() if val is not None})
        known = RealizationConfig.__fields__
        resolved = self.resolve(
            RealizationConfig.parse_obj(
                {key: val for key, val in settings.items() if key in known}
            )
        )
        problem = self.build_problem(net, resolved)

        A_prime = np.zeros((problem.m, problem.m))
        for react in cand.reactions:
            src = net.complex_index(cand.complexes[react.source].coeffs)
            dst = net.complex_index(cand.complexes[react.target].coeffs)
            A_prime[dst, src] = react.rate
        np.fill_diagonal(A_prime, -A_prime.sum(axis=0))

        c = np.ones(problem.n) if candidate.c is None else np.asarray(candidate.c, dtype=float)
        decoded = published_realization(problem, A_prime, c)
        conjugate = conjugacy_result(decoded.A_b, decoded.c, problem.Y)
        report = self._verification(
            problem,
            decoded,
            conjugate,
            seed if seed is not None else resolved.seed,
            build_Ak(net),
            trajectory,
        )
        logger.info('verification %s', 'passed' if report.passed else 'failed')
        return VerificationResult(problem, decoded, report)

    @staticmethod
    def _reorder_species(cand: Network, species: Sequence[str]) -> Network:
        if sorted(cand.species_names) != sorted(species):
            raise NetworkError(
                f'solution species {cand.species_names} differ from {list(species)}'
            )
        perm = [cand.species_names.index(name) for name in species]
        return Network(
            species,
            [[c.coeffs[k] for k in perm] for c in cand.complexes],
            [(r.source, r.target, r.rate) for r in cand.reactions],
        )

    # artifacts
    def write_artifacts(
        self, result: RealizationResult, out: str, lp: bool = False
    ) -> List[str]:
        """Writes <out>.json (the realization document) and, when a
        network was found, <out>.rxn and <out>.dot; <out>.lp on request

        :return: The paths written
        """
        written = []
        contents: Dict[str, str] = {'.json': dump_json(result.document)}
        if result.network is not None:
            contents['.rxn'] = render_network(result.network)
            contents['.dot'] = network_to_dot(result.network, name=self._graph_name(out))
        if lp:
            contents['.lp'] = export_lp_file(result.encoded.model)

        folder = os.path.dirname(out)
        if folder:
            os.makedirs(folder, exist_ok=True)
        for ext, text in contents.items():
            with open(out + ext, 'wt') as fh:
                fh.write(text)
            written.append(out + ext)
        return written

    @staticmethod
    def _graph_name(out: str) -> str:
        name = ''.join(ch if ch.isalnum() else '_' for ch in os.path.basename(out))
        return name if name and not name[0].isdigit() else 'network'
