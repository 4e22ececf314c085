"""Exceptions raised by the package."""


class SvtvError(Exception):
    """Base class for all package errors."""


class ShapeError(SvtvError, ValueError):
    """Dimensions of two objects do not agree."""


class GeometryError(SvtvError, ValueError):
    """Invalid acquisition geometry."""


class ProjectorError(SvtvError):
    """The projector could not be built."""


class ImageFormatError(SvtvError):
    """Malformed image, sinogram or operator file."""


class ConfigError(SvtvError):
    """Invalid run configuration.

    Parameters
    ----------
    message : str
        Description of the problem.
    key : str, optional
        The offending configuration key.
    line : int, optional
        Line number in the configuration file.
    """

    def __init__(self, message: str, key: str = None, line: int = None):
        self.message = message
        self.key = key
        self.line = line
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if key is not None:
            prefix += f"'{key}': "
        super().__init__(prefix + message)


class SolverError(SvtvError):
    """The solver produced non-finite iterates.

    Parameters
    ----------
    message : str
        Description of the problem.
    trace : SolverTrace
        The trace recorded up to the failure.
    """

    def __init__(self, message: str, trace=None):
        self.trace = trace
        super().__init__(message)
