from typing import Any, List, Optional

__all__ = [
    'AuditError',
    'CRNError',
    'DecodeError',
    'InadmissibleError',
    'ModelError',
    'NetworkError',
    'NetworkParseError',
    'NumericalError',
    'PreconditionError',
    'EXIT_OK',
    'EXIT_FAILURE',
    'EXIT_INFEASIBLE',
    'EXIT_LIMIT',
]

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INFEASIBLE = 2
EXIT_LIMIT = 3


# ============================================================================
class CRNError(Exception):
    """Base error for the toolkit, carrying a detail message and
    the exit code the command line should terminate with
    """

    exit_code: int = EXIT_FAILURE

    def __init__(self, detail: Any, exit_code: Optional[int] = None) -> None:
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code

    def __str__(self) -> str:
        return str(self.detail)


class NetworkParseError(CRNError):
    """Syntax error in a reaction or ODE file, 1-based position"""

    def __init__(self, detail: str, line: int = 0, column: int = 0) -> None:
        self.line = line
        self.column = column
        if line:
            detail = f'line {line}, column {column}: {detail}'
        super().__init__(detail)


class NetworkError(CRNError):
    pass


class InadmissibleError(NetworkParseError):
    """A negative monomial in equation i that does not contain species i"""

    def __init__(self, detail: str, equation: int, exponents: Any, line: int = 0):
        self.equation = equation
        self.exponents = tuple(exponents)
        super().__init__(detail, line=line, column=1 if line else 0)


class PreconditionError(CRNError):
    pass


class ModelError(CRNError):
    pass


class NumericalError(CRNError):
    pass


class DecodeError(CRNError):
    pass


class AuditError(CRNError):
    def __init__(self, detail: str, violations: Optional[List[Any]] = None) -> None:
        super().__init__(detail)
        self.violations = violations or []
