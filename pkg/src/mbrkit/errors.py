"""Exception types shared across the toolkit.

Each class carries the CLI exit code it maps to.
"""


class MBRError(Exception):
    exit_code = 1


class ConfigError(MBRError, ValueError):
    """Invalid model description or experiment configuration."""

    exit_code = 1


class ParameterError(MBRError, ValueError):
    exit_code = 1


class StrategyError(ParameterError):
    """A hypothesis-generation strategy cannot produce what was asked."""


class InputDataError(MBRError):
    """Malformed or inconsistent input files."""

    exit_code = 2


class OracleInfeasibleError(MBRError):
    """Exact enumeration would exceed the configured budget."""

    exit_code = 3
