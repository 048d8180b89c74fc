"""Exception classes shared across the package."""


class PresaiseError(Exception):
    """Base class for all package errors."""


class EmptyBlock(PresaiseError):
    """An action partition contains no samples."""


class NonFinite(PresaiseError):
    """An objective became NaN/Inf; usually a sign of bad input scaling."""


class DegenerateOutcome(PresaiseError):
    """All training outcomes identical; only an intercept can be fit."""


class EmptyPriceRange(PresaiseError):
    """Requested price bounds exclude every price on the grid."""


class BudgetExceeded(PresaiseError):
    """Path enumeration would exceed the configured budget."""

    def __init__(self, count: int, budget: int):
        super().__init__(f"{count} paths exceed enumeration budget {budget}")
        self.count = count
        self.budget = budget


class TooLarge(PresaiseError):
    """Brute-force search space exceeds the safety guard."""


class BadPartition(PresaiseError):
    """Requested covariate partition sizes are inconsistent."""


class SchemaMismatch(PresaiseError):
    """CSV columns do not match the documented header."""


class TooFewRows(PresaiseError):
    """A market has too few rows to fit models."""


class UnknownSession(PresaiseError):
    """No session with the given id."""


class UnknownMarket(PresaiseError):
    """No ingested market for the given origin/destination pair."""


class ClientTimeout(PresaiseError):
    """The completion endpoint did not answer in time."""


class MalformedCompletion(PresaiseError):
    """The completion endpoint returned text we cannot parse."""
