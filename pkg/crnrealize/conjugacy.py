from __future__ import annotations

from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import NetworkError, PreconditionError
from .network import mass_action
from .schema import ConjugacyReport, TrajectoryReport, TrajectoryStatus
from .utils import get_logger

__all__ = [
    'ConjugacyResult',
    'apply_transform',
    'check_conjugacy',
    'check_target_conjugacy',
    'conjugacy_result',
    'rk4',
    'trajectory_check',
]

logger = get_logger('conjugacy')

DEFAULT_SEED = 42
DEFAULT_SAMPLES = 100
SAMPLE_RANGE = (0.1, 10.0)
SAMPLE_TOL = 1e-6
ALGEBRAIC_TOL = 1e-7

TRAJECTORY_TOL = 1e-5
STEP_TOL = 1e-8
INITIAL_STEPS = 10
MAX_STEPS = 10 * 2 ** 14
STATE_RANGE = (1e-12, 1e12)

Field = Callable[[np.ndarray], np.ndarray]


# ============================================================================
class ConjugacyResult(NamedTuple):
    A_b: np.ndarray
    c: np.ndarray
    A_k_prime: np.ndarray
    T: np.ndarray


def _positive(c: Sequence[float], what: str) -> np.ndarray:
    arr = np.asarray(c, dtype=float)
    if arr.ndim != 1 or np.any(~(arr > 0)):
        raise PreconditionError(f'{what} must be a positive vector, got {arr.tolist()}')
    return arr


def apply_transform(A_b: np.ndarray, c: Sequence[float], Y: np.ndarray) -> np.ndarray:
    """A_k' = A_b . diag(Psi(c)): column j of A_b scaled by Psi_j(c)"""
    c = _positive(c, 'conjugacy vector c')
    A_b = np.asarray(A_b, dtype=float)
    Y = np.asarray(Y)
    if A_b.shape != (Y.shape[1], Y.shape[1]):
        raise NetworkError(f'A_b has shape {A_b.shape}, Y has {Y.shape[1]} complexes')
    return A_b * mass_action(Y, c)[None, :]


def conjugacy_result(A_b: np.ndarray, c: Sequence[float], Y: np.ndarray) -> ConjugacyResult:
    c = _positive(c, 'conjugacy vector c')
    return ConjugacyResult(np.asarray(A_b, dtype=float), c, apply_transform(A_b, c, Y), np.diag(c))


def _field(Y: np.ndarray, A: np.ndarray) -> Field:
    Y = np.asarray(Y, dtype=float)
    YA = Y @ np.asarray(A, dtype=float)

    def f(x: np.ndarray) -> np.ndarray:
        return YA @ np.prod(x[:, None] ** Y, axis=0)

    return f


# ============================================================================
def check_conjugacy(
    Y: np.ndarray,
    A_k_given: np.ndarray,
    A_k_prime: np.ndarray,
    c: Sequence[float],
    sample_count: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
) -> ConjugacyReport:
    """Checks Y A_k Psi(x) = T Y A_k' Psi(T^-1 x) at seeded random points
    of [0.1, 10]^n, and the identity Y A_k = T Y A_b entrywise

    :return: The report, with the first violating point if any
    """
    Y = np.asarray(Y)
    M = Y @ np.asarray(A_k_given, dtype=float)
    return check_target_conjugacy(Y, M, A_k_prime, c, sample_count, seed)


def check_target_conjugacy(
    Y: np.ndarray,
    M: np.ndarray,
    A_k_prime: np.ndarray,
    c: Sequence[float],
    sample_count: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
) -> ConjugacyReport:
    """check_conjugacy against the target product M = Y A_k"""
    c = _positive(c, 'conjugacy vector c')
    Y = np.asarray(Y)
    M = np.asarray(M, dtype=float)
    A_prime = np.asarray(A_k_prime, dtype=float)
    if c.shape != (Y.shape[0],):
        raise NetworkError(f'c has {c.size} entries, expected {Y.shape[0]}')
    if M.shape != Y.shape or A_prime.shape != (Y.shape[1], Y.shape[1]):
        raise NetworkError(
            f'shapes disagree: Y {Y.shape}, M {M.shape}, A_k\' {A_prime.shape}'
        )

    A_b = A_prime / mass_action(Y, c)[None, :]
    algebraic = float(np.max(np.abs(M - c[:, None] * (Y @ A_b)), initial=0.0))

    Yf = Y.astype(float)
    conjugate = _field(Y, A_prime)
    rng = np.random.default_rng(seed)
    points = rng.uniform(*SAMPLE_RANGE, size=(sample_count, Y.shape[0]))

    worst = 0.0
    first = None
    for num, x in enumerate(points):
        lhs = M @ np.prod(x[:, None] ** Yf, axis=0)
        rhs = c * conjugate(x / c)
        residual = float(np.max(np.abs(lhs - rhs), initial=0.0))
        scale = 1.0 + float(np.max(np.abs(lhs), initial=0.0))
        worst = max(worst, residual / scale)
        if residual > SAMPLE_TOL * scale and first is None:
            first = {'sample': num, 'x': x.tolist(), 'residual': residual}

    passed = algebraic <= ALGEBRAIC_TOL and first is None
    if not passed:
        logger.debug('conjugacy check failed: algebraic %.3g, first %s', algebraic, first)
    return ConjugacyReport(
        passed=passed,
        seed=seed,
        sample_count=sample_count,
        algebraic_residual=algebraic,
        max_relative_residual=worst,
        first_violation=first,
    )


# ============================================================================
def rk4(f: Field, x0: np.ndarray, t_end: float, steps: int, record_every: int) -> np.ndarray:
    """Classical fixed-step Runge-Kutta, returns the state every
    ``record_every`` steps. Stops early (returning the rows so far) once
    the state leaves the admissible range.
    """
    h = t_end / steps
    x = np.array(x0, dtype=float)
    states: List[np.ndarray] = []
    for step in range(1, steps + 1):
        k1 = f(x)
        k2 = f(x + 0.5 * h * k1)
        k3 = f(x + 0.5 * h * k2)
        k4 = f(x + h * k3)
        x = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (
            not np.all(np.isfinite(x))
            or np.any(x < STATE_RANGE[0])
            or np.any(x > STATE_RANGE[1])
        ):
            break
        if step % record_every == 0:
            states.append(x)
    return np.array(states)


def _integrate(
    f: Field, x0: np.ndarray, t_end: float, checkpoints: int
) -> Tuple[Optional[np.ndarray], int]:
    """Doubles the step count until the endpoint moves by less than
    STEP_TOL; None when the state escapes or the count hits MAX_STEPS
    """
    steps = INITIAL_STEPS * checkpoints
    previous = rk4(f, x0, t_end, steps, steps // checkpoints)
    while steps <= MAX_STEPS:
        if len(previous) != checkpoints:
            return None, steps
        steps *= 2
        current = rk4(f, x0, t_end, steps, steps // checkpoints)
        if len(current) != checkpoints:
            return None, steps
        if np.max(np.abs(current[-1] - previous[-1])) < STEP_TOL:
            return current, steps
        previous = current
    return None, steps


def trajectory_check(
    Y: np.ndarray,
    A_k_given: np.ndarray,
    A_k_prime: np.ndarray,
    c: Sequence[float],
    x0: Sequence[float],
    t_end: float = 5.0,
    checkpoints: int = 10,
) -> TrajectoryReport:
    """Integrates the given system from x0 and the conjugate system from
    T^-1 x0 and compares T^-1 Phi(x0, t) with the conjugate trajectory at
    evenly spaced checkpoints
    """
    c = _positive(c, 'conjugacy vector c')
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != c.shape:
        raise NetworkError(f'x0 has {x0.size} entries, expected {c.size}')
    if np.any(~(x0 > 0)):
        raise PreconditionError(f'initial state must be positive, got {x0.tolist()}')
    if not t_end > 0:
        raise PreconditionError(f't_end must be positive, got {t_end}')

    times = [t_end * (k + 1) / checkpoints for k in range(checkpoints)]
    given, steps_given = _integrate(_field(Y, A_k_given), x0, t_end, checkpoints)
    conjugate, steps_conj = _integrate(_field(Y, A_k_prime), x0 / c, t_end, checkpoints)
    steps = max(steps_given, steps_conj)

    if given is None or conjugate is None:
        return TrajectoryReport(
            status=TrajectoryStatus.INCONCLUSIVE,
            steps=steps,
            t_end=t_end,
            checkpoints=times,
            message='state left [1e-12, 1e12] or step refinement did not converge',
        )

    deviation = float(np.max(np.abs(given / c[None, :] - conjugate)))
    status = TrajectoryStatus.PASSED if deviation <= TRAJECTORY_TOL else TrajectoryStatus.FAILED
    return TrajectoryReport(
        status=status,
        steps=steps,
        t_end=t_end,
        max_deviation=deviation,
        checkpoints=times,
        message='' if status == TrajectoryStatus.PASSED else 'trajectories diverge',
    )
