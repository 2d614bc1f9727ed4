"""Transmit Wiener filters for fully digital, hybrid and DMA transmitters.

All three solvers share the closed form for a fixed effective channel.  The
hybrid and DMA solvers wrap it in a descent over the analog state (phase
shifts or element susceptances), using the MSE that already embeds the
optimal digital precoder.
"""

from dataclasses import dataclass

import numpy as np

from ._linalg import FastLU
from .errors import DegenerateChannelError, InvalidArgumentError
from .optim import OptimizerSettings, minimize
from .topology import DmaChannelMap, PhaseNetwork

__all__ = [
    "PrecoderSolution",
    "regularizer",
    "regularized_gram",
    "wiener_filter",
    "wf_fd",
    "mse_direct",
    "mse_hybrid",
    "grad_theta",
    "HybridObjective",
    "wf_hybrid",
    "mse_dma",
    "DmaObjective",
    "grad_ys",
    "ResonanceCoordinates",
    "wf_dma",
]


@dataclass
class PrecoderSolution:
    """Digital precoder ``B`` (``B_h`` for hybrid), receive scaling and analog state.

    ``H_eq`` is the channel seen by ``B`` (``H_a Q`` for hybrid).
    """

    B: np.ndarray
    beta: float
    achieved_mse: float
    H_eq: np.ndarray
    topology: str = "fd"
    analog_state: object = None
    iterations: int = 0
    converged: bool = True
    history: list = None


def regularizer(n_users, noise_variance, p_max, Y_g):
    if not p_max > 0:
        raise InvalidArgumentError("P_g^max must be positive")
    return n_users * noise_variance * Y_g / (2 * p_max)


def regularized_gram(H, noise_variance, p_max, Y_g, n_users=None):
    """``A = H^H H + (M sigma^2 Y_g / (2 P_max)) I``."""
    H = np.asarray(H)
    m = H.shape[0] if n_users is None else n_users
    c = regularizer(m, noise_variance, p_max, Y_g)
    return H.conj().T @ H + c * np.eye(H.shape[1])


def wiener_filter(H, c, p_max, Y_g, power_scale=1.0):
    """Closed-form filter ``B = beta A^{-1} H^H`` for regularizer ``c``.

    Computed through the ``M x M`` system ``(H H^H + c I)``.  ``power_scale``
    multiplies ``tr(B^H B)`` in the power constraint (``N / N_t`` for hybrid).
    Returns ``(B, beta, mse)``.
    """
    H = np.asarray(H)
    m = H.shape[0]
    if not np.any(H) or not np.all(np.isfinite(H)):
        raise DegenerateChannelError("channel is zero or non-finite; beta is undefined")
    R = H @ H.conj().T + c * np.eye(m)
    Ri = np.linalg.inv(R)
    F = H.conj().T @ Ri
    norm2 = float(np.real(np.vdot(F, F)))
    beta = np.sqrt(2 * p_max / (Y_g * power_scale * norm2))
    mse = float(c * np.real(np.trace(Ri)))
    return beta * F, float(beta), mse


def wf_fd(H_a, noise_variance, p_max, Y_g):
    c = regularizer(H_a.shape[0], noise_variance, p_max, Y_g)
    B, beta, mse = wiener_filter(H_a, c, p_max, Y_g)
    return PrecoderSolution(B, beta, mse, np.asarray(H_a), "fd")


def mse_direct(H, B, beta, noise_variance, n_users=None):
    """Closed form of ``E ||x - (H B x + n) / beta||^2`` for white unit-power symbols."""
    if not beta > 0:
        raise InvalidArgumentError("beta must be positive")
    H = np.asarray(H)
    m = H.shape[0] if n_users is None else n_users
    E = np.eye(H.shape[0]) - H @ B / beta
    return float(np.real(np.vdot(E, E)) + m * noise_variance / beta**2)


# -- hybrid ------------------------------------------------------------------

def mse_hybrid(H_a, Q, noise_variance, p_max, Y_g):
    """``tr{I - H_a Q (Q^H A Q)^{-1} Q^H H_a^H}``, evaluated densely."""
    A = regularized_gram(H_a, noise_variance, p_max, Y_g)
    K = Q.conj().T @ A @ Q
    C = np.linalg.solve(K, Q.conj().T)
    m = H_a.shape[0]
    return float(np.real(np.trace(np.eye(m) - H_a @ Q @ C @ H_a.conj().T)))


def grad_theta(H_a, Q, noise_variance, p_max, Y_g):
    """Gradient of the hybrid MSE with respect to the phase matrix (``N x N_t``).

    ``2 Im{(C_h H^H H [I - Q C_h A])^T o Q}`` with ``C_h = (Q^H A Q)^{-1} Q^H``;
    entries where ``Q`` is zero are zero.
    """
    A = regularized_gram(H_a, noise_variance, p_max, Y_g)
    C = np.linalg.solve(Q.conj().T @ A @ Q, Q.conj().T)
    n = Q.shape[0]
    inner = C @ H_a.conj().T @ H_a @ (np.eye(n) - Q @ C @ A)
    return 2 * np.imag(inner.T * Q)


class HybridObjective:
    """Hybrid MSE and its phase gradient, one phase per antenna.

    Uses ``Q^H Q = (N / N_t) I`` to work with ``M x M`` matrices only.
    """

    def __init__(self, H_a, n_transmitters, noise_variance, p_max, Y_g):
        self.H = np.asarray(H_a)
        m, n = self.H.shape
        if n % n_transmitters:
            raise InvalidArgumentError("N must be divisible by N_t")
        self.m, self.n, self.nt = m, n, n_transmitters
        self.npt = n // n_transmitters
        self.c_eff = regularizer(m, noise_variance, p_max, Y_g) * self.npt
        self._feed = np.repeat(np.arange(n_transmitters), self.npt)
        self._cols = np.arange(n)

    def effective(self, theta):
        q = np.exp(1j * theta)
        return (self.H * q).reshape(self.m, self.nt, self.npt).sum(axis=-1), q

    def __call__(self, theta):
        heff, q = self.effective(theta)
        Ri = np.linalg.inv(heff @ heff.conj().T + self.c_eff * np.eye(self.m))
        f = float(self.c_eff * np.real(np.trace(Ri)))
        X = heff.conj().T @ (Ri @ Ri) @ self.H
        g = 2 * self.c_eff * np.imag(q * X[self._feed, self._cols])
        return f, g


def _check_selection(S):
    S = np.asarray(S)
    if S.ndim != 2 or not np.all((S == 0) | (S == 1)) or not np.all(S.sum(axis=1) == 1):
        raise InvalidArgumentError("S must be binary with exactly one 1 per row")
    counts = S.sum(axis=0)
    if not np.all(counts == counts[0]):
        raise InvalidArgumentError("every transmitter must feed the same number of antennas")
    feed = np.argmax(S, axis=1)
    if not np.all(np.diff(feed) >= 0):
        raise InvalidArgumentError("antennas of one transmitter must be contiguous")
    return S.shape[1]


def _init_rng(settings, restart, stream):
    return np.random.default_rng(np.random.SeedSequence([settings.seed, stream, restart]))


def wf_hybrid(H_a, S, noise_variance, p_max, Y_g, settings=None, theta0=None, stream=0):
    """Hybrid Wiener filter: descend on the phases, then form ``B_h`` and ``beta``.

    ``stream`` separates the initialization draws of independent trials.
    """
    settings = settings or OptimizerSettings()
    nt = _check_selection(S)
    obj = HybridObjective(H_a, nt, noise_variance, p_max, Y_g)
    best = None
    for r in range(settings.restarts):
        if theta0 is not None and r == 0:
            x0 = np.asarray(theta0, dtype=float)
        else:
            x0 = _init_rng(settings, r, stream).uniform(0, 2 * np.pi, obj.n)
        res = minimize(obj, x0, settings)
        if best is None or res.fun < best.fun:
            best = res
    theta = np.mod(best.x, 2 * np.pi)
    heff, _ = obj.effective(theta)
    B, beta, mse = wiener_filter(heff, obj.c_eff, p_max, Y_g, power_scale=obj.npt)
    return PrecoderSolution(B, beta, mse, heff, "hybrid", PhaseNetwork.contiguous(theta, nt),
                            best.iterations, best.converged, best.history)


# -- DMA ---------------------------------------------------------------------

def mse_dma(H_d, noise_variance, p_max, Y_g, n_users=None):
    """``tr(G^{-1})`` with ``G = I + (2 P_max / (M sigma^2 Y_g)) H_d H_d^H``."""
    H = np.asarray(H_d)
    m = H.shape[0] if n_users is None else n_users
    gamma = 2 * p_max / (m * noise_variance * Y_g)
    G = np.eye(H.shape[0]) + gamma * H @ H.conj().T
    return float(np.real(np.trace(np.linalg.inv(G))))


class DmaObjective:
    """DMA MSE as a function of the element susceptances, with gradient.

    Holds one channel draw ``Y_rs`` and the load-independent structure.
    """

    def __init__(self, structure, Y_rs, consts, noise_variance, p_max):
        self.structure = structure
        self.Y_rs = np.asarray(Y_rs)
        self.alpha_r = consts.alpha_r
        self.Y_g = structure.Y_g
        self.m = self.Y_rs.shape[0]
        self.noise_variance = noise_variance
        self.p_max = p_max
        self.gamma = 2 * p_max / (self.m * noise_variance * self.Y_g)
        self._eye_t = np.eye(structure.n_transmitters)
        self._eye_m = np.eye(self.m)
        nt = structure.n_transmitters
        # Y_ss is reciprocal, so (Y_s + Y_ss)^-T = (Y_s + Y_ss)^-1 and the
        # gradient's transposed solve rides along with the forward one.
        self._symmetric = np.allclose(structure.Y_ss, structure.Y_ss.T, rtol=1e-12, atol=0)
        rhs = [structure.Y_st] + ([self.Y_rs.T] if self._symmetric else [])
        self._rhs = np.asfortranarray(np.hstack(rhs), dtype=complex)
        self._nt = nt

    def _solve(self, y_im):
        s = self.structure
        Zm = s.Y_ss.copy()
        Zm[np.diag_indices_from(Zm)] += s.r_s + 1j * np.asarray(y_im)
        lu = FastLU(Zm, "Y_s + Y_ss")
        sol = lu.solve(self._rhs)
        zy = sol[:, :self._nt]
        Y_p = s.Y_tt - s.Y_st.T @ zy
        F = np.linalg.solve((self.Y_g * self._eye_t + Y_p).T, zy.T).T
        H = self.alpha_r * self.Y_g * self.Y_rs @ F
        return H, F, zy, sol, lu

    def channel(self, y_im):
        """``H_d`` and the element-to-port map ``F = Z Y_st W``."""
        H, F, *_ = self._solve(y_im)
        return H, F

    def __call__(self, y_im):
        H, F, zy, sol, lu = self._solve(y_im)
        Gi = np.linalg.inv(self._eye_m + self.gamma * H @ H.conj().T)
        f = float(np.real(np.trace(Gi)))
        k = 1.0 / (self.Y_g * self.alpha_r)
        if self._symmetric:
            E = sol[:, self._nt:].T + k * (H @ zy.T)
        else:
            V = self.Y_rs + k * (H @ self.structure.Y_st.T)
            E = lu.solve(np.ascontiguousarray(V.T), trans=1).T
        X = F @ (H.conj().T @ (Gi @ Gi))
        d = np.einsum("nm,mn->n", X, E)
        g = -(4 * self.p_max * self.alpha_r / (self.m * self.noise_variance)) * np.imag(d)
        return f, g


def grad_ys(structure, Y_rs, y_im, consts, noise_variance, p_max):
    """Gradient of the DMA MSE with respect to the tunable susceptances."""
    return DmaObjective(structure, Y_rs, consts, noise_variance, p_max)(y_im)[1]


class ResonanceCoordinates:
    """``y_im = c + w tan(phi)`` per element, centred on the element resonance.

    ``c`` cancels the self-reactance of ``Y_ss`` and ``w`` is the element's
    total resistance, so ``phi`` sweeps the element response around its
    Lorentzian circle at a uniform rate.  Descent in ``phi`` converges much
    faster than in raw susceptance.
    """

    def __init__(self, structure):
        d = np.diag(structure.Y_ss)
        self.center = -d.imag
        self.width = d.real + structure.r_s

    def to_susceptance(self, phi):
        return self.center + self.width * np.tan(phi)

    def from_susceptance(self, y_im):
        return np.arctan((np.asarray(y_im, dtype=float) - self.center) / self.width)

    def wrap(self, objective):
        def fun(phi):
            f, g = objective(self.to_susceptance(phi))
            return f, g * self.width / np.cos(phi) ** 2
        return fun


DMA_PARAMETERIZATIONS = ("resonance", "susceptance")


def wf_dma(structure, Y_rs, consts, noise_variance, p_max, settings=None, y0=None, stream=0,
           parameterization="resonance"):
    """DMA Wiener filter: descend on ``Y_s^im``, then the closed-form ``B``.

    Starting points are drawn uniformly from ``[-Y_g, Y_g]`` in susceptance.
    ``parameterization="resonance"`` runs the descent in
    :class:`ResonanceCoordinates`; ``"susceptance"`` descends on ``Y_s^im``
    directly.
    """
    if parameterization not in DMA_PARAMETERIZATIONS:
        raise InvalidArgumentError(f"unknown parameterization {parameterization!r}")
    settings = settings or OptimizerSettings()
    obj = DmaObjective(structure, Y_rs, consts, noise_variance, p_max)
    n = structure.n_elements
    coords = ResonanceCoordinates(structure) if parameterization == "resonance" else None
    fun = obj if coords is None else coords.wrap(obj)
    best = None
    for r in range(settings.restarts):
        if y0 is not None and r == 0:
            x0 = np.asarray(y0, dtype=float)
        else:
            x0 = _init_rng(settings, r, stream).uniform(-structure.Y_g, structure.Y_g, n)
        res = minimize(fun, x0 if coords is None else coords.from_susceptance(x0), settings)
        if best is None or res.fun < best.fun:
            best = res
    y_im = best.x if coords is None else coords.to_susceptance(best.x)
    H = DmaChannelMap(structure.with_load(y_im), consts)(Y_rs).H
    c = regularizer(obj.m, noise_variance, p_max, structure.Y_g)
    B, beta, mse = wiener_filter(H, c, p_max, structure.Y_g)
    return PrecoderSolution(B, beta, mse, H, "dma", y_im, best.iterations, best.converged, best.history)
