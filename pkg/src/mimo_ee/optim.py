"""Line-search descent used by the hybrid and DMA solvers."""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class OptimizerSettings:
    max_iterations: int = 500
    gradient_tolerance: float = 1e-7
    function_tolerance: float = 1e-12
    sufficient_decrease: float = 1e-4
    shrink: float = 0.5
    restarts: int = 1
    seed: int = 0
    method: str = "lbfgs"
    memory: int = 30

    def __post_init__(self):
        if self.max_iterations < 1 or self.restarts < 1 or self.memory < 1:
            raise InvalidArgumentError("iteration, restart and memory counts must be positive")
        if not (self.gradient_tolerance > 0 and self.sufficient_decrease > 0):
            raise InvalidArgumentError("tolerances must be positive")
        if not 0 < self.shrink < 1:
            raise InvalidArgumentError("shrink factor must lie in (0, 1)")
        if self.method not in ("lbfgs", "gd"):
            raise InvalidArgumentError(f"unknown method {self.method!r}")


@dataclass
class OptimResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)


def _lbfgs_direction(g, s_hist, y_hist):
    """``-H g`` for the L-BFGS inverse Hessian, in compact matrix form.

    Same result as the two-loop recursion, with a handful of BLAS calls
    instead of a Python loop over the stored pairs.
    """
    if not s_hist:
        return -g / max(np.max(np.abs(g)), 1e-300)
    S = np.array(s_hist)
    Y = np.array(y_hist)
    gamma = (S[-1] @ Y[-1]) / (Y[-1] @ Y[-1])
    SY = S @ Y.T
    R = np.triu(SY)
    a = S @ g
    b = Y @ g
    q = solve_triangular(R, a, check_finite=False)
    p = solve_triangular(R, np.diag(SY) * q + gamma * (Y @ (Y.T @ q)) - gamma * b, trans="T",
                         check_finite=False)
    return -(gamma * g + p @ S - gamma * (q @ Y))


def minimize(fun, x0, settings=None):
    """Minimize ``fun`` (returning value and gradient) from ``x0``.

    Every accepted step satisfies the Armijo condition, so ``history`` is
    non-increasing.  Stops on the gradient infinity-norm, on a relative
    decrease below ``function_tolerance``, or when backtracking fails.
    """
    settings = settings or OptimizerSettings()
    x = np.array(x0, dtype=float)
    f, g = fun(x)
    history = [f]
    s_hist, y_hist = [], []
    step = 1.0
    converged = False
    it = 0
    for it in range(1, settings.max_iterations + 1):
        if np.max(np.abs(g)) <= settings.gradient_tolerance:
            converged = True
            it -= 1
            break
        if settings.method == "lbfgs":
            d = _lbfgs_direction(g, s_hist, y_hist)
            t = 1.0
        else:
            d = -g / max(np.max(np.abs(g)), 1e-300)
            t = min(2 * step, 1e6)
        slope = g @ d
        if not slope < 0:
            s_hist.clear()
            y_hist.clear()
            d = -g / max(np.max(np.abs(g)), 1e-300)
            slope = g @ d
        while True:
            x_new = x + t * d
            f_new, g_new = fun(x_new)
            if np.isfinite(f_new) and f_new <= f + settings.sufficient_decrease * t * slope:
                break
            t *= settings.shrink
            if t < 1e-14:
                return OptimResult(x, f, it - 1, np.max(np.abs(g)) <= 10 * settings.gradient_tolerance, history)
        step = t
        s, yv = x_new - x, g_new - g
        if s @ yv > 1e-12 * np.sqrt((s @ s) * (yv @ yv)):
            s_hist.append(s)
            y_hist.append(yv)
            if len(s_hist) > settings.memory:
                s_hist.pop(0)
                y_hist.pop(0)
        small = f - f_new <= settings.function_tolerance * max(1.0, abs(f))
        x, f, g = x_new, f_new, g_new
        history.append(f)
        if small:
            converged = True
            break
    else:
        converged = np.max(np.abs(g)) <= settings.gradient_tolerance
    return OptimResult(x, f, it, bool(converged), history)
