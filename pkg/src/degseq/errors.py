"""Exception types shared across the package."""


class DegseqError(Exception):
    pass


class ParameterError(DegseqError, ValueError):
    """Invalid model parameters or mismatched dimensions."""


class CapacityError(DegseqError):
    """Requested size exceeds an enumeration or search cutoff."""


class NumericError(DegseqError):
    """A numerical routine failed to reach its target accuracy."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class DegenerateInputError(DegseqError, ValueError):
    """Input at which a formula is singular."""
