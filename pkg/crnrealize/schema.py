from enum import Enum
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, Field, validator

from .utils import parse_number

__all__ = [
    'AuditReport',
    'ConjugacyMode',
    'ConjugacyReport',
    'CrosscheckReport',
    'MilpConfig',
    'MonomialDocument',
    'NetworkDocument',
    'Objective',
    'PolySystemDocument',
    'ReactionDocument',
    'RealizationConfig',
    'RealizationDocument',
    'Relation',
    'SolutionDocument',
    'SolveStatus',
    'SolverKind',
    'TrajectoryReport',
    'TrajectoryStatus',
    'VarKind',
    'VerificationReport',
    'Violation',
]

# ============================================================================
Number = float
BoundMatrix = Union[Number, List[List[Number]]]


class Objective(str, Enum):
    SPARSE = 'sparse'
    DENSE = 'dense'


class ConjugacyMode(str, Enum):
    IDENTITY = 'identity'
    SCALING = 'scaling'


class SolverKind(str, Enum):
    EMBEDDED = 'embedded'
    LPFILE = 'lpfile'


class SolveStatus(str, Enum):
    OPTIMAL = 'optimal'
    INFEASIBLE = 'infeasible'
    UNBOUNDED = 'unbounded'
    TIME_LIMIT = 'time-limit'


class VarKind(str, Enum):
    CONTINUOUS = 'continuous'
    BINARY = 'binary'


class Relation(str, Enum):
    LE = '<='
    EQ = '='
    GE = '>='


class TrajectoryStatus(str, Enum):
    PASSED = 'passed'
    FAILED = 'failed'
    INCONCLUSIVE = 'inconclusive'


# ============================================================================
class ReactionDocument(BaseModel):
    src: int
    dst: int
    k: float


class NetworkDocument(BaseModel):
    """Canonical JSON form of a network, complex and species indices are 1-based"""

    class Config:
        extra = 'forbid'

    species: List[str] = []
    complexes: List[List[int]] = []
    reactions: List[ReactionDocument] = []


class MonomialDocument(BaseModel):
    coefficient: float
    exponents: List[int]


class PolySystemDocument(BaseModel):
    class Config:
        extra = 'forbid'

    n: int
    equations: List[List[MonomialDocument]]


# ============================================================================
class MilpConfig(BaseModel):
    time_limit: float = Field(600.0, description='Wall clock limit in seconds')
    node_limit: int = Field(200000, description='Maximum branch-and-bound nodes')
    feasibility_tol: float = 1e-7
    integrality_tol: float = 1e-6
    rounding_heuristic: bool = True


class RealizationConfig(BaseModel):
    class Config:
        extra = 'forbid'

    name: Optional[str] = Field('', description='User friendly name')
    objective: Objective = Field(
        Objective.SPARSE, description='Fewest (sparse) or most (dense) reactions'
    )
    weakly_reversible: bool = False
    conjugacy: ConjugacyMode = ConjugacyMode.IDENTITY
    epsilon: Optional[float] = Field(
        None, description='Structural threshold for a reaction to be on'
    )
    epsilon_c: Optional[float] = Field(
        None, description='Conjugacy constants are bounded by [epsilon_c, 1/epsilon_c]'
    )
    u: Optional[BoundMatrix] = Field(None, description='Upper bounds of rates')
    solver: SolverKind = SolverKind.EMBEDDED
    time_limit: Optional[float] = None
    node_limit: Optional[int] = None
    seed: Optional[int] = None
    complexes: List[str] = Field(
        [], description='Extra complexes (formulas) added to the complex set'
    )

    @validator('epsilon', 'epsilon_c', pre=True)
    def fraction(cls, value):
        if isinstance(value, str):
            return parse_number(value)
        return value

    @validator('epsilon', 'epsilon_c')
    def positive(cls, value):
        if value is not None and value <= 0:
            raise ValueError('must be positive')
        return value


# ============================================================================
class Violation(BaseModel):
    family: str
    index: str = ''
    residual: float = 0.0
    detail: str = ''


class AuditReport(BaseModel):
    passed: bool
    families: Dict[str, bool] = {}
    violations: List[Violation] = []
    notes: List[str] = []


class ConjugacyReport(BaseModel):
    passed: bool
    seed: int
    sample_count: int
    algebraic_residual: float
    max_relative_residual: float
    first_violation: Optional[Dict[str, Any]] = None


class TrajectoryReport(BaseModel):
    status: TrajectoryStatus
    steps: int = 0
    t_end: float = 0.0
    max_deviation: float = 0.0
    checkpoints: List[float] = []
    message: str = ''


class CrosscheckReport(BaseModel):
    seed: int
    trials: int
    m_max: int
    weakly_reversible: int = 0
    not_weakly_reversible: int = 0
    empty: int = 0
    disagreements: int = 0


class VerificationReport(BaseModel):
    passed: bool
    audit: AuditReport
    conjugacy: Optional[ConjugacyReport] = None
    trajectory: Optional[TrajectoryReport] = None


class RealizationDocument(BaseModel):
    """Everything emitted for one solved realization problem"""

    name: str = ''
    status: SolveStatus
    objective: Objective
    weakly_reversible: bool
    conjugacy: ConjugacyMode
    epsilon: float
    epsilon_c: float
    u: Optional[BoundMatrix] = None
    objective_value: Optional[float] = None
    nodes: int = 0
    num_reactions: int = 0
    network: Optional[NetworkDocument] = None
    c: List[float] = []
    t: List[float] = []
    a_b: List[List[float]] = []
    a_k_prime: List[List[float]] = []
    a_tilde: List[List[float]] = []
    b: List[float] = []
    kernel: List[float] = []
    deficiency: Optional[int] = None
    linkage_classes: List[List[int]] = []
    verification: Optional[VerificationReport] = None


class SolutionDocument(BaseModel):
    """A candidate realization to verify: the conjugate network (document
    or reaction file text) with its conjugacy vector, and the settings it
    claims to satisfy. Realization documents load as solutions.
    """

    objective: Objective = Objective.SPARSE
    weakly_reversible: bool = False
    conjugacy: ConjugacyMode = ConjugacyMode.IDENTITY
    epsilon: Optional[float] = None
    epsilon_c: Optional[float] = None
    u: Optional[BoundMatrix] = None
    c: Optional[List[float]] = None
    network: Union[NetworkDocument, str]

    @validator('epsilon', 'epsilon_c', pre=True)
    def fraction(cls, value):
        if isinstance(value, str):
            return parse_number(value)
        return value
