"""Exception hierarchy shared across the package.

Every error raised on a documented failure path has its own class so callers
can catch precisely; all inherit from CrossMarketError.
"""


class CrossMarketError(Exception):
    pass


class DataError(CrossMarketError):
    """Malformed or inconsistent input data."""


class ConfigError(CrossMarketError):
    """Invalid run configuration."""


class PlanError(CrossMarketError):
    """Invalid experiment plan."""


# --- market data -----------------------------------------------------------

class MissingColumn(DataError):
    pass


class NonMonotoneDates(DataError):
    pass


class NegativePrice(DataError):
    pass


class DuplicateTickerDate(DataError):
    pass


class InsufficientDates(DataError):
    pass


class KindMismatch(DataError):
    pass


class DateMismatch(DataError):
    pass


class EmptyInput(DataError):
    pass


class NTooLarge(DataError):
    pass


class InsufficientHistory(DataError):
    pass


# --- screening -------------------------------------------------------------

class ConstantPredictor(CrossMarketError):
    """Predictor window has zero variance; the regression slope is undefined."""


class DegeneratePerfectFit(CrossMarketError):
    """Residual sum of squares is numerically zero; the t-statistic diverges."""


class WindowUnavailable(CrossMarketError):
    pass


class TickerSetMismatch(CrossMarketError):
    pass


class InsufficientCandidates(CrossMarketError):
    pass


# --- models ----------------------------------------------------------------

class DimensionMismatch(CrossMarketError):
    pass


class WrongArity(CrossMarketError):
    pass


# --- backtest / experiments ------------------------------------------------

class ZeroVolatility(CrossMarketError):
    """PnL series has zero sample standard deviation; SR is undefined."""


class SpanUnavailable(CrossMarketError):
    pass


class EmptySubset(CrossMarketError):
    pass


class UnlabeledTicker(CrossMarketError):
    pass


class InvalidSpec(CrossMarketError):
    pass
