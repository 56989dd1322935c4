"""Exception hierarchy for icnlab.

Domain constructors raise these; the CLI maps them to exit codes.
"""


class IcnLabError(Exception):
    """Base class for all icnlab errors."""


class InvalidParameterError(IcnLabError, ValueError):
    """A parameter is outside its valid range.

    Args:
        field: Name of the offending field (matches the config/flag key)
        reason: Short human-readable reason, e.g. "out of [0,1]"
    """

    def __init__(self, field: str, reason: str):
        self.field = field
        self.reason = reason
        super().__init__(f"{field} {reason}")


class IndexOutOfRangeError(IcnLabError, IndexError):
    """A content or ICN index is outside its admissible range."""

    def __init__(self, name: str, index: int, low: int, high: int):
        self.name = name
        self.index = index
        super().__init__(f"{name}={index} outside [{low}, {high}]")


class EnumerationBudgetError(IcnLabError):
    """The oracle refuses an enumeration larger than its budget."""


class EquilibriumViolationError(IcnLabError):
    """An oracle found a profitable unilateral deviation where none should exist."""


class ConfigError(IcnLabError):
    """Configuration file or flags could not be read or are malformed."""
