"""Exception hierarchy shared by all modules."""


class CrestedError(Exception):
    """Base class for every error raised by this package."""


class CycleError(CrestedError, ValueError):
    """The cover relation does not generate a partial order."""


class NotAncestral(CrestedError, ValueError):
    pass


class SizeLimit(CrestedError):
    """An exhaustive search was requested beyond its size bound."""


class DimensionMismatch(CrestedError, ValueError):
    pass


class InvalidMeasure(CrestedError, ValueError):
    pass


class InvalidSpec(CrestedError, ValueError):
    pass


class NotIrreducible(CrestedError, ValueError):
    pass


class NotReversible(CrestedError, ValueError):
    def __init__(self, message, violating=()):
        super().__init__(message)
        self.violating = tuple(violating)


class IsolatedVertex(CrestedError, ValueError):
    pass


class SizeCapError(CrestedError):
    """The dense state space would exceed the hard cap."""


class Degenerate(CrestedError, ArithmeticError):
    pass
