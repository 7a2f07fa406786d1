"""Exception hierarchy shared across the package."""


class ImpnetError(Exception):
    """Base class for all package errors."""


class StructureError(ImpnetError, ValueError):
    """Array shapes or field types in a network do not agree."""


class SpecFormatError(ImpnetError, ValueError):
    """A network document could not be parsed; carries a line anchor when known."""

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where = f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class KernelDivergenceError(ImpnetError, ValueError):
    """An exponential moment was requested at or beyond the kernel's abscissa."""


class SingularTransformError(ImpnetError, ZeroDivisionError):
    """An impulse with strength 1 sends the impulse product to zero."""


class HistoryUnderflowError(ImpnetError, LookupError):
    """A delayed argument reached before the representable initial history."""


class CertificateError(ImpnetError):
    """The stability inequalities cannot be satisfied.

    ``partial`` holds whatever part of the certificate was computed.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class AssumptionError(ImpnetError):
    """A standing assumption needed by the requested operation fails."""


class GridMismatchError(ImpnetError, ValueError):
    """Two trajectories (or a trajectory and an orbit) are not on the same grid."""
