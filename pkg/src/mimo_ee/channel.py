"""Correlated Rayleigh channels with coupling-derived spatial covariance."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidArgumentError, InvalidCovarianceError


def build_covariance(Y_aa, rho=1.0):
    """Scale ``Re{Y_aa}`` so that every channel entry has average power ``rho``."""
    re = np.real(np.asarray(Y_aa))
    diag = np.diag(re)
    if not np.allclose(diag, diag[0], rtol=1e-12, atol=0) or diag[0] <= 0:
        raise InvalidCovarianceError("Re{Y_aa} must have a constant positive diagonal")
    if not np.allclose(re, re.T, rtol=0, atol=1e-12 * diag[0]):
        raise InvalidCovarianceError("Re{Y_aa} must be symmetric")
    sigma = rho / diag[0] * re
    sigma = (sigma + sigma.T) / 2
    if np.linalg.eigvalsh(sigma)[0] < -1e-10 * np.trace(sigma):
        raise InvalidCovarianceError("Re{Y_aa} is not positive semidefinite")
    return sigma


def noise_variance_for_ratio(ratio, consts, rho=1.0):
    """Noise variance giving ``alpha_r^2 E|h|^2 / sigma^2 = ratio``."""
    if not ratio > 0:
        raise InvalidArgumentError("ratio must be positive")
    return consts.alpha_r**2 * rho / ratio


@dataclass(frozen=True)
class ChannelModelParams:
    n_users: int
    covariance: np.ndarray
    noise_variance: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if self.n_users < 1:
            raise InvalidArgumentError("need at least one user")
        if not self.noise_variance > 0:
            raise InvalidArgumentError("noise variance must be positive")

    @cached_property
    def sqrt_covariance(self):
        cov = np.asarray(self.covariance, dtype=float)
        n = cov.shape[0]
        jitter = 1e-12 * np.trace(cov)
        try:
            return np.linalg.cholesky(cov + jitter * np.eye(n))
        except np.linalg.LinAlgError as exc:
            raise InvalidCovarianceError(f"Cholesky failed: {exc}") from None


def channel_rng(seed, index, attempt=0):
    """Generator keyed by ``(seed, index, attempt)``; no shared stream between trials."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index), int(attempt)]))


def sample_channel(params, realization_index, attempt=0):
    """Draw an ``M x N`` channel whose rows are i.i.d. CN(0, Sigma)."""
    rng = channel_rng(params.seed, realization_index, attempt)
    n = params.sqrt_covariance.shape[0]
    w = rng.standard_normal((params.n_users, n, 2))
    white = (w[..., 0] + 1j * w[..., 1]) / np.sqrt(2)
    return white @ params.sqrt_covariance.T
