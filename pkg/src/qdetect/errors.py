"""Exception hierarchy.

Errors fall in two families: ``InputError`` for malformed or invalid data
(CLI exit code 2) and ``NumericalError`` for failures during computation
(CLI exit code 3).
"""


class QDetectError(Exception):
    """Base class for all package errors."""


class InputError(QDetectError, ValueError):
    pass


class NumericalError(QDetectError, ArithmeticError):
    pass


class NotHermitianError(InputError):
    pass


class NotPsdError(InputError):
    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class SingularError(NumericalError):
    pass


class EigenError(NumericalError):
    """Eigensolver failed to converge; ``residual`` is the off-diagonal norm left."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DimensionMismatch(InputError):
    pass


class PriorsInvalid(InputError):
    pass


class SpanDeficient(InputError):
    def __init__(self, message, deficiency):
        super().__init__(message)
        self.deficiency = deficiency


class InvalidPovm(InputError):
    pass


class ConditionNotMet(QDetectError):
    """The square-root optimality condition does not hold for this ensemble."""


class NotUnitary(InputError):
    def __init__(self, index, residual):
        super().__init__(f"group element {index} is not unitary (residual {residual:.3g})")
        self.index = index
        self.residual = residual


class NotClosed(InputError):
    def __init__(self, i, j, residual):
        super().__init__(
            f"product of elements {i} and {j} is not in the set "
            f"(nearest element at distance {residual:.3g})"
        )
        self.i = i
        self.j = j
        self.residual = residual


class NoIdentity(InputError):
    pass


class DuplicateElement(InputError):
    pass


class GeneratorsNotGu(InputError):
    pass


class NotPhaseCommuting(InputError):
    pass


class CountMismatch(InputError):
    pass


class MaxIterations(NumericalError):
    """Solver hit its iteration cap. ``solution`` holds the best iterate."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class NumericalBreakdown(NumericalError):
    pass


class RecoveryInfeasible(NumericalError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
