"""Exception types shared across the package."""


class DihedralError(Exception):
    """Base class for package errors."""


class SolverError(DihedralError):
    """A numerical solver failed to produce an answer."""


class SingularJacobian(SolverError):
    pass


class NoConvergence(SolverError):
    pass


class InitialPointNotConverged(SolverError):
    pass


class StepUnderflow(SolverError):
    pass


class UnsupportedCase(DihedralError, ValueError):
    pass


class NotSixDivisible(DihedralError, ValueError):
    pass


class DivisionByIntervalContainingZero(DihedralError, ZeroDivisionError):
    pass


class NegativeSqrt(DihedralError, ValueError):
    pass
