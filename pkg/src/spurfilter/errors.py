"""Exception hierarchy shared by all spurfilter modules."""


class SpurFilterError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SpurFilterError, ValueError):
    """An argument lies outside the domain of a formula."""


class ConfigurationError(SpurFilterError, ValueError):
    """Inconsistent or missing configuration values."""


class GeometryError(SpurFilterError, ValueError):
    """A filter or body geometry violates one of its invariants."""


class MeshError(SpurFilterError):
    """The mesher could not triangulate a profile."""


class ResolutionError(SpurFilterError):
    """The mesh is too coarse for the requested frequency."""


class SolverError(SpurFilterError):
    """A linear solve failed or produced an unacceptable residual."""


class MeasurementError(SpurFilterError, ValueError):
    """Malformed or mismatched measurement data."""


class ObjectiveError(SpurFilterError):
    """An objective function returned a non-finite value."""

    def __init__(self, x, value):
        super().__init__(f"objective returned {value!r} at x={x!r}")
        self.x = x
        self.value = value
