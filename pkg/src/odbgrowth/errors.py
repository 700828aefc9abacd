"""Exception types. Each carries the CLI exit status it maps to."""


class OdbError(Exception):
    exit_code = 1


class ConfigError(OdbError, ValueError):
    """Malformed or inconsistent configuration / arguments."""

    exit_code = 2


class DomainError(ConfigError):
    """An argument lies outside the mathematical domain of an operation."""


class RegimeError(OdbError):
    """The (model, alpha) pair is outside the regime an operation requires."""

    exit_code = 3


class PreconditionError(RegimeError):
    """A non-regime precondition failed (e.g. no root of the saddle equation)."""


class NumericalAlarm(OdbError):
    """A numerical procedure could not certify its result."""

    exit_code = 4


class AnnulusError(NumericalAlarm):
    """r_1 >= 1: no circle separates z=1 from the poles -1/r_j."""
