"""Exception hierarchy shared by the solver modules."""


class PTTradeError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(PTTradeError, ValueError):
    """A model parameter violates its validity constraints."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class DomainError(PTTradeError, ValueError):
    """A function was evaluated outside its domain."""


class IllPosedError(PTTradeError):
    """The trading problem has an unbounded value for these parameters."""


class RegimeError(PTTradeError):
    """A quantity was requested that does not exist in the current regime."""


class NumericalError(PTTradeError, ArithmeticError):
    """A root search or numerical procedure failed to converge."""
