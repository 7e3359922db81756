"""Error taxonomy mapped to CLI exit codes."""


class SkelforgeError(Exception):
    """Base class; exit_code drives the CLI status."""

    exit_code = 4


class ConfigError(SkelforgeError):
    """Invalid configuration key or value."""

    exit_code = 3


class DataError(SkelforgeError):
    """Missing, malformed, or inconsistent data artifacts."""

    exit_code = 4


class NumericError(SkelforgeError):
    """Non-finite values or numerically impossible states."""

    exit_code = 5
