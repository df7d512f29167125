"""Exception hierarchy shared by every solver package."""


class SolverError(Exception):
    """Base class for all library errors."""


class DimensionMismatchError(SolverError, ValueError):
    """Operand shapes do not agree."""


class InvalidParameterError(SolverError, ValueError):
    """A precondition on an argument is violated."""


class MatrixMarketError(SolverError):
    """Malformed or unsupported Matrix Market input.

    Attributes:
        line: 1-based line number of the offending input line (0 when the
            problem is not tied to a single line, e.g. a short file).
    """

    def __init__(self, message: str, line: int = 0):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}" if line else message)


class DenseCapError(SolverError):
    """A dense conversion was refused because the matrix exceeds the cap."""


class NotPositiveDefiniteError(SolverError):
    """Cholesky factorization met a non-positive pivot.

    Attributes:
        pivot: 1-based index of the failing leading minor.
    """

    def __init__(self, message: str, pivot: int = 0):
        self.pivot = pivot
        super().__init__(message)


class SingularMatrixError(SolverError):
    """A matrix that must be inverted is numerically singular."""


class DegenerateRowError(SolverError):
    """A row-action step hit a zero row (or the whole matrix is zero)."""


class BreakdownError(SolverError):
    """A Krylov recurrence divided by a zero (or non-positive) quantity."""


class EigenvalueConvergenceError(SolverError):
    """The dense eigenvalue solver did not converge."""


class HessenbergRankError(SolverError):
    """The triangular factor of the Hessenberg least-squares problem is rank deficient."""
