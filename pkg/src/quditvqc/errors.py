"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Qudit or register dimension out of range."""


class ShapeError(ValueError):
    """Array length or shape does not match what the operation expects."""


class ContractError(ValueError):
    """An input violates a numerical precondition (Hermiticity, normalisation...)."""


class NormalizationError(ContractError):
    """A rotation axis is not a unit vector."""


class WiringError(ValueError):
    """Invalid two-qubit gate wiring, e.g. control equal to target."""


class LabelError(ValueError):
    """Class label outside ``0..n_classes-1``."""


class InvalidInputError(ValueError):
    """Empty batch, empty matrix or otherwise unusable input."""


class ConfigError(ValueError):
    """Unknown model kind or inconsistent run configuration."""


class ParseError(ValueError):
    """Malformed input file. Carries the path, line and column when known."""

    def __init__(self, message, path=None, line=None, column=None):
        self.path = path
        self.line = line
        self.column = column
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
