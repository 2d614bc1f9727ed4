import warnings

import numpy as np
from scipy.linalg import LinAlgWarning, get_lapack_funcs, lu_factor, lu_solve

from .errors import SingularMatrixError

RCOND_FLOOR = 1e-14


class LU:
    """LU factorization with a reciprocal-condition guard."""

    __slots__ = ("_lu", "name", "rcond")

    def __init__(self, matrix, name="matrix"):
        matrix = np.asarray(matrix)
        if not np.all(np.isfinite(matrix)):
            raise SingularMatrixError(name, 0.0)
        anorm = np.linalg.norm(matrix, 1)
        with warnings.catch_warnings():
            # exact singularity is reported below through rcond
            warnings.simplefilter("ignore", LinAlgWarning)
            lu, piv = lu_factor(matrix, check_finite=False)
        (gecon,) = get_lapack_funcs(("gecon",), (lu,))
        rcond, info = gecon(lu, anorm, norm="1")
        if anorm == 0 or info != 0 or not rcond >= RCOND_FLOOR:
            raise SingularMatrixError(name, float(rcond) if anorm else 0.0)
        self._lu = (lu, piv)
        self.name = name
        self.rcond = float(rcond)

    def solve(self, b, trans=0):
        return lu_solve(self._lu, b, trans=trans, check_finite=False)


class FastLU:
    """Unguarded LAPACK LU for hot loops; only exact singularity raises.

    Callers are expected to check the finiteness of what they compute.
    """

    __slots__ = ("_lu", "_piv", "_getrs")


    _routines = {}

    def __init__(self, matrix, name="matrix"):
        key = matrix.dtype.char
        if key not in FastLU._routines:
            FastLU._routines[key] = get_lapack_funcs(("getrf", "getrs"), (matrix,))
        getrf, getrs = FastLU._routines[key]
        lu, piv, info = getrf(matrix, overwrite_a=True)
        if info != 0:
            raise SingularMatrixError(name, 0.0)
        self._lu, self._piv, self._getrs = lu, piv, getrs

    def solve(self, b, trans=0):
        x, info = self._getrs(self._lu, self._piv, b, trans=trans)
        return x


def hermitian_inverse(matrix):
    """Inverse of a Hermitian positive definite matrix via Cholesky."""
    n = matrix.shape[0]
    c = np.linalg.cholesky(matrix)
    ci = np.linalg.solve(c, np.eye(n, dtype=c.dtype))
    return ci.conj().T @ ci
