"""Exception taxonomy shared by all modules."""


class RisSostatError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(RisSostatError, ValueError):
    """An argument lies outside the supported domain."""


class NumericError(RisSostatError, ArithmeticError):
    """A numerical procedure failed to reach its accuracy target."""


class PrecisionLossError(NumericError):
    """Input conditioning makes the requested closed form numerically unusable."""


class NotPositiveSemidefiniteError(NumericError):
    """A matrix required to be PSD has eigenvalues below tolerance."""


class DegenerateModelError(NumericError):
    """The model collapsed to a degenerate case (e.g. zero variance)."""


class UsageError(RisSostatError):
    """Invalid command, option or scenario combination."""
