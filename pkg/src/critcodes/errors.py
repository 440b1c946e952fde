"""Exception hierarchy. Each class carries the CLI exit code it maps to."""

from __future__ import annotations


class CodesError(Exception):
    exit_code = 2


class InvalidInput(CodesError):
    """Malformed parameters, points, or files."""


class UnsupportedNet(CodesError):
    """A finite net was requested on a space that has none at the given bounds."""


class ModulusViolation(InvalidInput):
    def __init__(self, message: str, pair=None):
        super().__init__(message)
        self.pair = pair


class PatchConflict(InvalidInput):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class EmptySupport(InvalidInput):
    """No finite upper evidence anywhere in the searched region."""


class UnsupportedPoint(InvalidInput):
    """The point has no finite upper evidence."""


class BudgetExceeded(CodesError):
    exit_code = 3

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class VerificationFailed(CodesError):
    exit_code = 4

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness
