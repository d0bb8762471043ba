"""Exception types shared across the package."""


class FKDropletError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(FKDropletError, ValueError):
    """A caller-supplied parameter is outside its documented domain."""


class InvalidRegionError(FKDropletError, ValueError):
    """A surgery region is empty or touches the box boundary."""


class PreconditionError(FKDropletError, ValueError):
    """A documented precondition was violated by the caller."""


class TooLargeError(FKDropletError, RuntimeError):
    """A resource guard refused an exponential-size computation."""


class UnsupportedParameterError(FKDropletError, ValueError):
    """The parameter value is valid mathematics but outside supported scope."""


class InsufficientDataError(FKDropletError, RuntimeError):
    """Not enough data to produce the requested estimate."""


class InvalidShapeError(FKDropletError, ValueError):
    """A Wulff shape is degenerate for the requested operation."""


class InternalError(FKDropletError, RuntimeError):
    """An internal invariant failed; indicates a bug, not a usage error."""
