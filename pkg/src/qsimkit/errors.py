"""Exception hierarchy shared by all qsimkit modules."""

from __future__ import annotations


class QSimError(Exception):
    """Base class for every error raised by qsimkit."""


class InputError(QSimError, ValueError):
    """Malformed or inconsistent user input (CLI exit code 2)."""


class NumericalError(QSimError, ArithmeticError):
    """A computation could not be completed reliably (CLI exit code 3)."""


class DimensionError(InputError):
    pass


class ArgumentError(InputError):
    pass


class ResourceError(InputError):
    """A dense-representation cap would be exceeded."""


class ParseError(InputError):
    """Text could not be parsed; carries a line and/or character position."""

    def __init__(self, message: str, line: int | None = None, position: int | None = None):
        self.line = line
        self.position = position
        where = []
        if line is not None:
            where.append(f"line {line}")
        if position is not None:
            where.append(f"position {position}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class HeaderError(ParseError):
    pass


class IndexOutOfRangeError(ParseError):
    pass


class ConsistencyError(ParseError):
    """Entries contradict each other (for example conflicting duplicates)."""


class ValidationError(InputError):
    pass


class ChannelError(InputError):
    """Kraus operators do not form a trace-preserving channel."""


class SymmetryViolationError(InputError):
    pass


class UnsupportedError(InputError):
    pass


class PostSelectionError(NumericalError):
    """The requested measurement outcome has (numerically) zero probability."""


class AnnihilationError(NumericalError):
    """The operator annihilates the input state."""


class NotPSDError(NumericalError):
    pass


class DegenerateBasisError(NumericalError):
    pass


class EmptyEnsembleError(NumericalError):
    pass


class FitError(NumericalError):
    pass
