"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI lives in cli.py; library code raises
these and never calls sys.exit itself.
"""


class SigmanovError(Exception):
    """Base class for all package errors."""


class SpecMismatchError(SigmanovError):
    """Operands belong to different group specs / algebras."""


class UnsupportedSpecError(SigmanovError):
    """The requested operation has no fixture/rule for this group class."""


class BudgetExceededError(SigmanovError):
    """A configured support/size/time cap was exceeded."""

    def __init__(self, message, **info):
        super().__init__(message)
        self.info = info


class PositivityError(SigmanovError):
    """A strict-positivity precondition on supports could not be certified."""


class InconclusiveError(SigmanovError):
    """Retry caps reached without a verified result; carries the last radius."""

    def __init__(self, message, last_radius=None, degree=None):
        super().__init__(message)
        self.last_radius = last_radius
        self.degree = degree


class InvalidInverseError(SigmanovError):
    """The alleged one-sided inverse failed its truncation checks."""


class InvalidQuotientError(SigmanovError):
    """Generator images do not define a homomorphism to a finite group."""


class WrongComplexError(SigmanovError):
    """Certificate references a different complex (hash mismatch)."""


class FatalInconsistencyError(SigmanovError):
    """A certificate coexists with a prediction that rules it out."""


class InternalVerificationError(SigmanovError):
    """An internal exact self-check failed; indicates a bug, never recoverable."""
