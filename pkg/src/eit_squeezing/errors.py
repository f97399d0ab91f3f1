"""Exception hierarchy shared by the simulation modules."""


class SimulationError(Exception):
    """Base class for all package errors."""


class GridMismatchError(SimulationError, ValueError):
    """Two spectra or signals live on incompatible grids."""


class SingularityError(SimulationError, ArithmeticError):
    """A model denominator vanished on the working grid."""


class NonPhysicalError(SimulationError, ValueError):
    """Input violates a physical constraint (below-vacuum noise, above threshold, ...)."""


class DegenerateInputError(SimulationError, ValueError):
    """Input carries no usable information (zero energy, single point, ...)."""


class ConvergenceError(SimulationError, RuntimeError):
    """An iterative solver failed to converge.

    ``best`` holds the best-so-far result when one is available.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class DataFormatError(SimulationError, ValueError):
    """A data file is malformed."""
