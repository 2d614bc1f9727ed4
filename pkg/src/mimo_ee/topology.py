"""Effective channels, phase-shifting networks and supplied-power accounting."""

from dataclasses import dataclass

import numpy as np

from ._linalg import LU
from .errors import InvalidArgumentError


@dataclass(frozen=True)
class EffectiveChannel:
    H: np.ndarray
    topology: str


class ArrayChannelMap:
    """Maps a channel draw ``Y_ra`` to ``H_a = -a_r Y_g Y_ra (Y_g I + Y_aa)^{-1}``."""

    def __init__(self, Y_aa, Y_g, consts, topology="fd"):
        if not Y_g > 0:
            raise InvalidArgumentError("Y_g must be positive")
        self.Y_g = float(Y_g)
        self.alpha_r = consts.alpha_r
        self.topology = topology
        n = Y_aa.shape[0]
        self._lu = LU(self.Y_g * np.eye(n) + Y_aa, "Y_g I + Y_aa")

    def __call__(self, Y_ra):
        # X (Y_g I + Y_aa)^{-1} = (A^{-T} X^T)^T
        sol = self._lu.solve(np.asarray(Y_ra).T, trans=1).T
        return EffectiveChannel(-self.alpha_r * self.Y_g * sol, self.topology)


def effective_channel_array(Y_aa, Y_g, consts, topology="fd"):
    return ArrayChannelMap(Y_aa, Y_g, consts, topology)


class DmaChannelMap:
    """Maps ``Y_rs`` to ``H_d = a_r Y_g Y_rs (Y_s + Y_ss)^{-1} Y_st (Y_g I + Y_p)^{-1}``."""

    def __init__(self, admittances, consts):
        self.admittances = admittances
        self.Y_g = admittances.Y_g
        self.alpha_r = consts.alpha_r
        nt = admittances.Y_tt.shape[0]
        Y_p = admittances.Y_p
        self._port_lu = LU(self.Y_g * np.eye(nt) + Y_p, "Y_g I + Y_p")
        # F = (Y_s + Y_ss)^{-1} Y_st (Y_g I + Y_p)^{-1}, shape N x N_t
        zy = admittances._cache["Z_Y_st"]
        self.element_to_port = self._port_lu.solve(zy.T, trans=1).T

    def __call__(self, Y_rs):
        return EffectiveChannel(self.alpha_r * self.Y_g * np.asarray(Y_rs) @ self.element_to_port, "dma")


def effective_channel_dma(admittances, consts):
    return DmaChannelMap(admittances, consts)


@dataclass(frozen=True)
class PhaseNetwork:
    """Partially connected phase shifters ``Q = exp(i Theta) o S``.

    ``theta`` holds one phase per antenna; ``feed_map[n]`` is the transmitter
    that antenna ``n`` hangs from.
    """

    theta: np.ndarray
    feed_map: np.ndarray
    n_transmitters: int

    @classmethod
    def contiguous(cls, theta, n_transmitters):
        theta = np.asarray(theta, dtype=float)
        n = theta.shape[0]
        if n % n_transmitters:
            raise InvalidArgumentError("N must be divisible by N_t")
        return cls(theta, np.repeat(np.arange(n_transmitters), n // n_transmitters), n_transmitters)

    @property
    def S(self):
        s = np.zeros((self.feed_map.shape[0], self.n_transmitters))
        s[np.arange(self.feed_map.shape[0]), self.feed_map] = 1.0
        return s

    @property
    def Theta(self):
        return self.theta[:, None] * self.S

    @property
    def Q(self):
        return np.exp(1j * self.Theta) * self.S

    @property
    def subarray_size(self):
        return self.feed_map.shape[0] // self.n_transmitters


def supplied_power(B, Y_g, Q=None):
    """``(Y_g / 2) tr(B^H B)``, with ``B = Q B_h`` when a phase network is given."""
    B = np.asarray(B)
    if Q is not None:
        B = Q @ B
    return 0.5 * Y_g * float(np.real(np.vdot(B, B)))


def per_amplifier_output(B, Y_g, topology="fd", n_per_tx=1):
    """Output power of each amplifier; the hybrid case scales by ``N / N_t``."""
    p = 0.5 * Y_g * np.sum(np.abs(np.asarray(B)) ** 2, axis=1)
    if topology == "hybrid":
        p = p * n_per_tx
    return p
