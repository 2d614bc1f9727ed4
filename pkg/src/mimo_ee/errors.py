"""Exception hierarchy shared by all modules."""

import numpy as np


class MimoEEError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(MimoEEError, ValueError):
    pass


class InvalidGeometryError(MimoEEError, ValueError):
    pass


class InvalidCovarianceError(MimoEEError, ValueError):
    pass


class DegenerateChannelError(MimoEEError, ValueError):
    pass


class SaturationViolationError(MimoEEError, ValueError):
    """An amplifier was asked to deliver more than its saturation power."""


class SingularMatrixError(MimoEEError, np.linalg.LinAlgError):
    """Raised when a factorization is numerically singular.

    Attributes
    ----------
    rcond : float
        Reciprocal condition estimate of the offending matrix.
    factor : str
        Name of the factor that failed (e.g. ``"Y_s + Y_ss"``).
    """

    def __init__(self, factor, rcond):
        self.factor = factor
        self.rcond = rcond
        super().__init__(f"{factor} is singular (reciprocal condition ~ {rcond:.3e})")
