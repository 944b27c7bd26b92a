"""Exception hierarchy shared by all modules."""


class RomError(Exception):
    """Base class for every error raised by dmdrom."""


class DomainError(RomError, ValueError):
    """Input outside the domain of an operation."""


class PreconditionError(DomainError):
    """A documented precondition on the inputs does not hold."""


class NumericalError(RomError, ArithmeticError):
    """A decomposition failed or a computation produced non-finite values."""


class FormatError(RomError, ValueError):
    """A persisted container is malformed or inconsistent."""


class ConfigError(RomError, ValueError):
    """Pipeline configuration is invalid or inconsistent."""
