"""Exception hierarchy. CLI exit codes are attached to each class."""


class DecolabError(Exception):
    exit_code = 2


class InvalidParameterError(DecolabError, ValueError):
    """A physical parameter is out of its domain (nonfinite, negative, ...)."""


class ConfigError(DecolabError, ValueError):
    """Config file could not be parsed or failed validation."""

    def __init__(self, message, *, line=None, field=None):
        self.line = line
        self.field = field
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if field is not None:
            prefix += f"{field}: "
        super().__init__(prefix + message)


class UndefinedCoherenceError(InvalidParameterError):
    """Coherence needs at least two slits."""


class ResolutionError(InvalidParameterError):
    """Grid does not resolve a required length scale."""


class NumericalError(DecolabError, ArithmeticError):
    exit_code = 3


class ProtocolInapplicableError(DecolabError):
    """The two-mode intensity protocol cannot be applied to this configuration."""

    exit_code = 4
