"""Power consumption model, amplifier models and evaluation metrics."""

from dataclasses import dataclass, fields

import numpy as np

from .errors import InvalidArgumentError, SaturationViolationError


def dac_power(bits, sample_rate):
    """DAC consumption ``1.5e-5 2^b + 9e-12 b F_s`` in watts."""
    if bits < 1 or sample_rate < 0:
        raise InvalidArgumentError("need bits >= 1 and a non-negative sample rate")
    return 1.5e-5 * 2.0**bits + 9e-12 * bits * sample_rate


@dataclass(frozen=True)
class ConsumptionParams:
    P_bb: float = 0.040
    P_rf: float = 0.040
    P_ps: float = 0.0218
    P_var: float = 0.0
    dac_bits: int = 8
    dac_rate: float = 100e6
    eta_a: float = 0.3
    amplifier_model: str = "nonlinear"
    P_sat: float = None
    P_dac_fixed: float = None

    def __post_init__(self):
        for name in ("P_bb", "P_rf", "P_ps", "P_var", "dac_rate"):
            if getattr(self, name) < 0:
                raise InvalidArgumentError(f"{name} must be non-negative")
        if not 0 < self.eta_a <= 1:
            raise InvalidArgumentError("eta_a must lie in (0, 1]")
        if self.amplifier_model not in ("linear", "nonlinear"):
            raise InvalidArgumentError(f"unknown amplifier model {self.amplifier_model!r}")

    @property
    def P_dac(self):
        if self.P_dac_fixed is not None:
            return self.P_dac_fixed
        return dac_power(self.dac_bits, self.dac_rate)


def saturation_power(topology, p_max, n_antennas, n_transmitters, fd_factor=5.0, other_factor=3.0):
    """Calibrated saturation power: ``5 P/N`` for FD, ``3 P/N_t`` otherwise."""
    if topology == "fd":
        return fd_factor * p_max / n_antennas
    return other_factor * p_max / n_transmitters


def amplifier_power(p_out, params, strict=True):
    """Consumption of all amplifiers for per-amplifier output powers ``p_out``.

    With ``strict`` an output above ``P_sat`` raises; otherwise the formula is
    applied as is.
    """
    p_out = np.asarray(p_out, dtype=float)
    if np.any(p_out < 0):
        raise InvalidArgumentError("output powers must be non-negative")
    if params.amplifier_model == "linear":
        return float(p_out.sum() / params.eta_a)
    if params.P_sat is None or not params.P_sat > 0:
        raise InvalidArgumentError("the nonlinear model needs a positive P_sat")
    if strict and np.any(p_out > params.P_sat):
        raise SaturationViolationError(
            f"max output {p_out.max():.4g} W exceeds P_sat = {params.P_sat:.4g} W"
        )
    return float(np.sum(np.sqrt(p_out * params.P_sat)) / params.eta_a)


@dataclass(frozen=True)
class PowerBreakdown:
    P_bb: float
    P_dac_total: float
    P_rf_total: float
    P_a: float
    P_ps_total: float
    P_var_total: float

    @property
    def P_total(self):
        return self.P_bb + self.P_dac_total + self.P_rf_total + self.P_a + self.P_ps_total + self.P_var_total

    def as_dict(self):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["P_total"] = self.P_total
        return d


def total_power(topology, n_transmitters, P_a, params, n_ps=0, n_var=0):
    if min(n_transmitters, n_ps, n_var) < 0:
        raise InvalidArgumentError("component counts must be non-negative")
    if topology in ("fd", "dma") and n_ps:
        raise InvalidArgumentError(f"{topology} has no phase shifters")
    if topology in ("fd", "hybrid") and n_var:
        raise InvalidArgumentError(f"{topology} has no varactors")
    return PowerBreakdown(
        P_bb=params.P_bb,
        P_dac_total=2 * n_transmitters * params.P_dac,
        P_rf_total=n_transmitters * params.P_rf,
        P_a=float(P_a),
        P_ps_total=n_ps * params.P_ps,
        P_var_total=n_var * params.P_var,
    )


def sinr(H_eq, B, noise_variance):
    """Per-user SINR of the linear precoder ``B`` over ``H_eq``."""
    gains = np.abs(np.asarray(H_eq) @ np.asarray(B)) ** 2
    signal = np.diag(gains)
    interference = gains.sum(axis=1) - signal
    return signal / (interference + noise_variance)


def sum_rate_and_ee(H_eq, B, noise_variance, P_total):
    """Sum spectral efficiency (bits/s/Hz) and energy efficiency (bits/s/Hz/W)."""
    if not P_total > 0:
        raise InvalidArgumentError("P_total must be positive")
    rate = float(np.sum(np.log2(1 + sinr(H_eq, B, noise_variance))))
    return rate, rate / P_total


@dataclass(frozen=True)
class EvaluationRecord:
    topology: str
    mse: float
    P_g: float
    power: PowerBreakdown
    sum_rate: float
    energy_efficiency: float
    max_output_ratio: float = 0.0
    trial: int = 0
    axis: float = float("nan")
