"""Exception types shared across the package."""

import numpy as np


class InvalidArgumentError(ValueError):
    """Bad shapes, unknown names, out-of-range parameters."""


class PreconditionError(ValueError):
    """An operation was called outside the domain where it is defined."""


class NumericalRankError(ArithmeticError):
    """A rank decision could not be made cleanly from a singular spectrum."""

    def __init__(self, message, spectrum=None):
        super().__init__(message)
        self.spectrum = None if spectrum is None else np.asarray(spectrum)


class AssumptionViolationError(RuntimeError):
    """No factor mode of the inputs has clustering number one."""

    def __init__(self, message, clustering=None):
        super().__init__(message)
        self.clustering = clustering


class DegenerateDecompositionError(ValueError):
    """The rank-1 terms of a decomposition are linearly dependent."""
