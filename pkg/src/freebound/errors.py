"""Exception types raised by the solvers."""


class FreeboundError(Exception):
    """Base class for all solver errors."""


class SingularSystem(FreeboundError):
    """A direct solve met a zero pivot."""


class NoConvergence(FreeboundError):
    """An iteration hit its cap before meeting its stopping test.

    ``state`` carries whatever diagnostic the raising solver had at hand
    (last iterate, index sets, residual history).
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class DomainError(FreeboundError, ValueError):
    """An argument lies outside the domain of the operation."""


class FrontCollapse(FreeboundError):
    """The tracked front shrank below the collapse guard."""

    def __init__(self, message, t=None, S=None):
        super().__init__(message)
        self.t = t
        self.S = S
