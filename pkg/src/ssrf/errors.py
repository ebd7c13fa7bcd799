"""Exception types. Each carries a short ``code`` used in CLI diagnostics."""


class SSRFError(Exception):
    code = "SSRFError"


class ConstantSeries(SSRFError, ValueError):
    code = "ConstantSeries"


class DegenerateRegressor(SSRFError, ValueError):
    code = "DegenerateRegressor"


class RankDeficient(SSRFError, ValueError):
    code = "RankDeficient"


class NotSymmetric(SSRFError, ValueError):
    code = "NotSymmetric"


class NonFinite(SSRFError, ValueError):
    code = "NonFinite"


class NonPositiveForLog(SSRFError, ValueError):
    code = "NonPositiveForLog"


class DivisionByZero(SSRFError, ValueError):
    code = "DivisionByZero"


class TooShort(SSRFError, ValueError):
    code = "TooShort"


class SchemaMismatch(SSRFError, ValueError):
    code = "SchemaMismatch"


class ParseError(SSRFError, ValueError):
    code = "ParseError"


class NonMonotoneDates(SSRFError, ValueError):
    code = "NonMonotoneDates"


class UnknownSeries(SSRFError, KeyError):
    code = "UnknownSeries"

    def __str__(self):
        return Exception.__str__(self)


class HorizonTooLarge(SSRFError, ValueError):
    code = "HorizonTooLarge"


class RankTooHigh(SSRFError, ValueError):
    code = "RankTooHigh"


class EmptySpectrum(SSRFError, ValueError):
    code = "EmptySpectrum"


class InsufficientData(SSRFError, ValueError):
    code = "InsufficientData"


class ConfigInvalid(SSRFError, ValueError):
    code = "ConfigInvalid"


class DimensionMismatch(SSRFError, ValueError):
    code = "DimensionMismatch"


class NotConverged(UserWarning):
    """Coordinate descent hit its sweep cap; the last iterate is returned."""

    code = "NotConverged"
