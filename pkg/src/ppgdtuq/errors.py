"""Exception families. Each carries the CLI exit code for its family."""


class PPGError(Exception):
    exit_code = 1


class ConfigError(PPGError, ValueError):
    """Invalid configuration values."""

    exit_code = 2


class IntegrityError(PPGError, ValueError):
    """Schema, parse, pairing or duplicate-id violations in data artifacts."""

    exit_code = 3


class ParseError(IntegrityError):
    pass


class NumericError(PPGError, ArithmeticError):
    """Non-finite values or diverged training."""

    exit_code = 4


class TrainingError(NumericError):
    pass


class InfeasibleError(PPGError, ValueError):
    """An operating-point constraint that no threshold satisfies."""

    exit_code = 5
