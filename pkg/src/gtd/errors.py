"""Exception hierarchy shared by all modules."""


class GTDError(Exception):
    """Base class for every error raised by this package."""


class ParseError(GTDError, ValueError):
    """Malformed expression or definition text."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line else ""
        super().__init__(f"{message}{where}")


class UndeclaredIdentifierError(ParseError):
    pass


class DomainError(GTDError, ValueError):
    """A point lies outside the real domain of an expression or system."""

    def __init__(self, message: str, subterm: str | None = None):
        self.subterm = subterm
        if subterm is not None:
            message = f"{message} in '{subterm}'"
        super().__init__(message)


class DegenerateMetricError(GTDError, ArithmeticError):
    """Metric determinant is numerically zero relative to its scale."""


class ConfigError(GTDError, ValueError):
    pass
