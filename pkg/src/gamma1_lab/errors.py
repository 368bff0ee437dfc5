"""Exception types shared across the package."""


class Gamma1LabError(Exception):
    """Base class for all package errors."""


class NotInvertible(Gamma1LabError, ArithmeticError):
    def __init__(self, a, t):
        super().__init__(f"{a} is not invertible modulo {t}")
        self.a = a
        self.t = t


class BudgetExceeded(Gamma1LabError):
    pass


class InternalError(Gamma1LabError):
    pass


class QuadratureFailure(Gamma1LabError):
    pass


class TailNotCertified(Gamma1LabError):
    """Raised (only in strict mode) when the truncation cap stops tail certification.

    ``value`` carries the best available result together with its honest tail bound.
    """

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class DegenerateRegression(Gamma1LabError):
    pass


class OutOfRange(Gamma1LabError, ValueError):
    pass
