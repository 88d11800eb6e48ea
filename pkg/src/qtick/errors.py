"""Exception hierarchy shared by all qtick modules."""


class QtickError(Exception):
    """Base class for every error raised by qtick."""


class ValidationError(QtickError, ValueError):
    """An input violates a documented invariant (non-unit axis, non-Hermitian matrix, ...)."""


class NumericError(QtickError, ArithmeticError):
    """A numerical procedure failed to converge or to find a required solution."""


class StateError(QtickError):
    """An operation was applied to a process graph in the wrong stage."""


class GraphStructureError(QtickError):
    """A process graph references node ids that do not exist, or repeats ids."""
