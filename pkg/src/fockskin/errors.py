"""Exception types raised by fockskin."""


class FockskinError(Exception):
    """Base class for all library errors."""


class StructureError(FockskinError):
    """A matrix does not have the block structure it is supposed to have."""


class DomainError(FockskinError, ValueError):
    """An argument lies on a singular set of the function being evaluated."""


class NumericalFailure(FockskinError):
    """An eigensolver, root finder or integrator did not converge."""


class AmbiguousWindingError(FockskinError):
    """The reference energy is too close to the spectral locus to assign a winding."""


class CrossCheckMismatch(NumericalFailure):
    """Two independent propagation routes disagree beyond tolerance."""


class TruncationError(FockskinError, ValueError):
    """A truncated Fock-space vector discards more weight than allowed."""


class DegenerateFitError(FockskinError, ValueError):
    """Too few usable samples for a least-squares fit."""
