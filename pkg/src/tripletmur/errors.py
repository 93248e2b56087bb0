"""Exception types shared across the package."""


class TripletMurError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(TripletMurError):
    """An argument failed a structural or numeric validity check."""


class UnsupportedInputError(TripletMurError):
    """The input is well formed but outside the scope of the operation."""


class PreconditionError(TripletMurError):
    """A documented precondition of the operation does not hold."""


class DegenerateGeometryError(TripletMurError):
    """The requested construction is undefined for this degenerate geometry."""


class InvalidSymmetryError(TripletMurError):
    """Symmetry generators failed to generate a finite group of the expected size."""


class NumericError(TripletMurError):
    """An internal numeric routine could not produce a reliable result."""
