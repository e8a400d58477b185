"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericError -> 4. Everything else is a plain bug and exits 1.
"""


class ChuloError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(ChuloError, ValueError):
    """Invalid configuration: bad value, missing file, incompatible options."""


class DataError(ChuloError, ValueError):
    """Malformed input data: bad records, unknown labels, length mismatches."""


class NumericError(ChuloError, ArithmeticError):
    """Numeric failure: non-finite values, failed gradient checks."""


class ScorerError(ChuloError, RuntimeError):
    """A log-probability scorer failed or returned a protocol error."""
