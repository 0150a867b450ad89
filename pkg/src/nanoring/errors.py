"""Exception types shared across the package."""


class NanoringError(Exception):
    """Base class for all package-specific errors."""


class InvalidSpecError(NanoringError, ValueError):
    """A ring/polarization specification violates its invariants."""


class GeometryError(NanoringError):
    """A layout operation produced coincident or overlapping sites."""


class SingularityError(NanoringError):
    """Field or coupling evaluation requested at a dipole position."""


class NumericalError(NanoringError):
    """A numerical routine (eigensolver, propagator) failed to converge."""


class ConfigError(NanoringError):
    """A CLI/experiment configuration failed validation."""
