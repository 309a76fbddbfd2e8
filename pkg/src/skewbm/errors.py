"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


class ConvergenceError(ArithmeticError):
    """A series or quadrature ran out of budget before meeting its tolerance.

    The best available estimate travels with the exception so callers can
    decide whether it is good enough.
    """

    def __init__(self, message, value=float("nan"), error_bound=float("inf")):
        super().__init__(message)
        self.value = value
        self.error_bound = error_bound
