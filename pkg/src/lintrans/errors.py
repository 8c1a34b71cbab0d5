"""Exception hierarchy shared by every module."""


class LintransError(Exception):
    """Base class for all toolkit errors."""


class IndeterminateSum(LintransError, ArithmeticError):
    """Raised on (+inf) + (-inf)."""


class DimensionMismatch(LintransError, ValueError):
    pass


class InvalidInput(LintransError, ValueError):
    pass


class NonpositiveScale(LintransError, ValueError):
    pass


class NoConvergence(LintransError, RuntimeError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NegativeCycle(LintransError, ValueError):
    """A cycle of negative total weight exists; ``cycle`` is a witness."""

    def __init__(self, message, cycle=None, weight=None):
        super().__init__(message)
        self.cycle = list(cycle) if cycle is not None else []
        self.weight = weight


class NoFiniteCycle(LintransError, ValueError):
    """Every cycle uses a +inf edge, so the Mather constant is +inf."""

    value = float("inf")


class CertificateUnavailable(LintransError, RuntimeError):
    pass


class PrimalInfinite(LintransError, ValueError):
    pass


class AbsoluteContinuityViolated(LintransError, ValueError):
    pass


class DeadState(LintransError, ValueError):
    def __init__(self, message, words=()):
        super().__init__(message)
        self.words = list(words)


class LPError(LintransError, RuntimeError):
    pass


class Infeasible(LPError):
    pass


class Unbounded(LPError):
    pass
