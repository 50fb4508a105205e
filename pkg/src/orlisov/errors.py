"""Exception types raised by orlisov."""


class OrlisovError(Exception):
    """Base class for all library errors."""


class DomainError(OrlisovError, ValueError):
    """An argument lies outside the domain of the operation (non-finite input, bad radius...)."""


class InvalidFunctionError(OrlisovError, ValueError):
    """A Young function or nonlinearity violates a structural requirement."""


class BracketError(OrlisovError, OverflowError):
    """A monotone root search could not bracket its target."""


class ConfigurationError(OrlisovError, ValueError):
    """Inconsistent domain / scheme / function combination."""
