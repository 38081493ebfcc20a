"""Exception hierarchy shared across the package."""


class BenfordError(Exception):
    """Base class for every error raised by this package."""


class DataError(BenfordError, ValueError):
    """Bad or unusable input data (empty dataset, unparsable files, ...)."""


class InversionError(BenfordError):
    """An expected-statistic curve could not be inverted reliably."""


class SearchExhaustedError(InversionError):
    """The simulated ECP search ran out of iterations.

    ``bracket`` holds the last ``(lo, hi)`` interval known to contain the root.
    """

    def __init__(self, message, bracket):
        super().__init__(message)
        self.bracket = bracket


class SearchCapError(BenfordError):
    """A sample-size search exceeded its configured upper bound."""
