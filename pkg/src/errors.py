"""
Errors - Exception Hierarchy and Exit Codes
===========================================

Every failure the engine raises derives from ``ForecastError``. The CLI
maps each family to its own exit code so scripted runs can tell a bad
config from bad data or a numerical blow-up.
"""

from enum import IntEnum


class ExitCode(IntEnum):
    """Process exit codes used by the command-line front door."""
    SUCCESS = 0
    FAILURE = 1
    USAGE = 2
    CONFIG = 3
    DATA = 4
    NUMERICAL = 5
    MISSING_SERIES = 6


class ForecastError(Exception):
    """Base class for all engine errors."""
    exit_code = ExitCode.FAILURE


class ConfigError(ForecastError, ValueError):
    """Malformed or invalid configuration document."""
    exit_code = ExitCode.CONFIG


class DataError(ForecastError, ValueError):
    """Dataset, schema or alignment problem."""
    exit_code = ExitCode.DATA


class ShapeError(ForecastError, ValueError):
    """Tensor dimensions do not agree."""
    exit_code = ExitCode.FAILURE


class ArgumentError(ForecastError, ValueError):
    """An argument is outside its admissible range."""
    exit_code = ExitCode.USAGE


class DomainError(ForecastError, ValueError):
    """A numeric function was evaluated outside its domain."""
    exit_code = ExitCode.NUMERICAL


class ContractError(ForecastError, RuntimeError):
    """A caller broke a precondition of the API."""
    exit_code = ExitCode.FAILURE


class NumericalError(ForecastError, ArithmeticError):
    """Training produced a non-finite loss or gradient."""
    exit_code = ExitCode.NUMERICAL


class UsageError(ForecastError):
    """Command-line usage problem detected after argument parsing."""
    exit_code = ExitCode.USAGE
