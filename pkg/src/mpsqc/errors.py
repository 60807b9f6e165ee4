"""Exception types raised across the package."""


class MpsqcError(Exception):
    """Base class for all package errors."""


class DomainError(MpsqcError, ValueError):
    """An argument lies outside the domain an operation accepts."""


class ValidationError(MpsqcError, ValueError):
    """A structured input (gate matrix, config, model file) is malformed."""


class UnsupportedTopologyError(MpsqcError):
    """A gate acts on wires the MPS backend cannot handle (non-adjacent pairs)."""


class ResourceError(MpsqcError):
    """The request would exceed a hard size limit."""


class IngestionError(MpsqcError):
    """A data file could not be read.

    Parameters
    ----------
    message : str
        Human readable description.
    path : str, optional
        File being read.
    line : int, optional
        1-based line number of the offending record.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class NumericalError(MpsqcError, ArithmeticError):
    """The optimizer met a non-finite value."""

    def __init__(self, message, iteration=None):
        self.iteration = iteration
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)
