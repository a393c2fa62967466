"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class ZeroVectorError(ValueError):
    """A vector with zero norm cannot be normalized."""


class NotSymmetricError(ValueError):
    """Input matrix is not symmetric within tolerance."""


class ParseError(ValueError):
    """Malformed dataset file. Carries the 1-based line number."""

    def __init__(self, message, path=None, lineno=None):
        self.path = path
        self.lineno = lineno
        where = ""
        if path is not None:
            where += f"{path}"
        if lineno is not None:
            where += f":{lineno}"
        super().__init__(f"{where}: {message}" if where else message)


class DivergenceError(ArithmeticError):
    """An iterate became non-finite."""


class SpecError(ValueError):
    """Invalid experiment definition or config file."""
