# drift/exceptions.py
"""Error hierarchy. ``exit_code`` is what the management commands exit with."""


class DriftError(Exception):
    exit_code = 1

    def to_dict(self):
        return {
            "error": type(self).__name__,
            "message": str(self),
            "exit_code": self.exit_code,
        }


class SchemaError(DriftError):
    """Input file does not match its documented layout."""
    exit_code = 2


class MalformedSymbol(SchemaError, ValueError):
    pass


class DuplicateSymbol(SchemaError):
    pass


class StoreFormatError(SchemaError):
    """Serialized store has the wrong magic bytes or format version."""


class ConfigError(DriftError, ValueError):
    exit_code = 3


class InvariantViolation(DriftError):
    exit_code = 4


class MissingIndicator(InvariantViolation):
    """A quality filter needs a family field that has not been populated."""


class InsufficientPoints(DriftError, ValueError):
    exit_code = 4


class ZeroDenominator(DriftError, ZeroDivisionError):
    exit_code = 4
