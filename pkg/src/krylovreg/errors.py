"""Exception types shared across the library."""


class KrylovRegError(Exception):
    """Base class for all library-specific failures."""


class DimensionMismatch(KrylovRegError):
    """Operands have incompatible shapes."""


class InvalidParam(KrylovRegError):
    """A parameter is outside its admissible range."""


class SingularMatrix(KrylovRegError):
    """A factorization met a pivot that is numerically zero."""


class NotPositiveDefinite(KrylovRegError):
    """A matrix that must be SPD failed its Cholesky factorization."""


class NonPositiveEntry(KrylovRegError):
    """A diagonal scaling vector contains an entry <= 0."""


class TooLarge(KrylovRegError):
    """Dense materialization would exceed the desk-scale guard."""


class InvalidPsf(KrylovRegError):
    """Point-spread-function parameters are unusable."""


class UnsupportedNu(InvalidParam):
    """Matern smoothness outside the supported half-integer set."""


class InvalidSize(KrylovRegError):
    """Requested problem size violates a generator precondition."""


class ZeroSignal(KrylovRegError):
    """Cannot scale noise against a zero observation."""


class ZeroVector(KrylovRegError):
    """A starting vector is identically zero."""


class BreakdownAtInit(KrylovRegError):
    """The first bidiagonalization step produced no Krylov direction."""


class AlreadyTerminated(KrylovRegError):
    """expand() was called after the bidiagonalization terminated."""


class NotEnoughSteps(KrylovRegError):
    """A projected matrix was requested before any expansion step."""


class SingularProjectedJacobian(KrylovRegError):
    """The small Newton system could not be solved."""

    def __init__(self, k: int, lam: float, message: str = ""):
        self.k = k
        self.lam = lam
        super().__init__(
            message or f"projected Jacobian singular at iteration {k}, lambda={lam!r}"
        )


class StepTooSmall(KrylovRegError):
    """Backtracking shrank the step below the configured minimum."""


class AssumptionViolated(KrylovRegError):
    """The noise-constraint feasibility check did not hold."""


class MaxIters(KrylovRegError):
    """Iteration limit reached without convergence."""


class NoBracket(KrylovRegError):
    """Bisection could not bracket a sign change."""


class ConfigError(KrylovRegError):
    """Experiment configuration is malformed."""
