"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`MatchMarketError`; most also derive from :class:`ValueError` so
callers that only care about bad input can catch that.
"""


class MatchMarketError(Exception):
    """Base class for all package errors."""


class InvalidPopulationError(MatchMarketError, ValueError):
    pass


class InvalidSpecError(MatchMarketError, ValueError):
    pass


class InvalidTransformError(MatchMarketError, ValueError):
    pass


class InconsistentPlanError(MatchMarketError, ValueError):
    pass


class UndefinedThresholdError(MatchMarketError, ValueError):
    pass


class InvalidInstanceError(MatchMarketError, ValueError):
    pass


class NoMatchedAgentsError(MatchMarketError, ValueError):
    pass


class InconsistentStateError(MatchMarketError, ValueError):
    pass


class DegenerateMomentsError(MatchMarketError, ValueError):
    pass


class InsufficientDegreeError(MatchMarketError, ValueError):
    pass


class NoMarriagePossibleError(MatchMarketError, ValueError):
    pass


class ConfigError(MatchMarketError, ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


class DataError(MatchMarketError, ValueError):
    """Invalid input data file (CLI exit code 3)."""


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class RangeError(ParseError):
    pass


class DegenerateSeriesError(DataError):
    pass
