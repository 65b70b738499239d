"""Exceptions shared by the library and the command line (each maps to an exit code)."""


class OlstreamError(Exception):
    exit_code = 1


class ConfigError(OlstreamError, ValueError):
    """Invalid parameters or input files."""

    exit_code = 2


class BudgetExceeded(OlstreamError):
    """An exhaustive search or exact computation would exceed its resource budget."""

    exit_code = 3


class InvariantViolation(OlstreamError):
    """A self-check failed: engines disagree, replay diverged, and so on."""

    exit_code = 4
