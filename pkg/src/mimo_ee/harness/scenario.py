"""Scenario description and TOML configuration loading.

Lengths in the configuration are in wavelengths; powers in watts except
``P_g_max_dBm``.
"""

import dataclasses
from dataclasses import dataclass, field, replace

import numpy as np
import tomli

from ..errors import InvalidArgumentError
from ..optim import OptimizerSettings
from ..power import ConsumptionParams
from ..precoding import DMA_PARAMETERIZATIONS

TOPOLOGIES = ("fd", "hybrid", "dma")


def dbm_to_watt(dbm):
    return 10 ** ((dbm - 30) / 10)


@dataclass(frozen=True)
class GeometryConfig:
    frequency: float = 10e9
    N_t: int = 8
    n_per_tx: int = 1
    spacing_x: float = 0.5
    spacing_z: float = 1.0
    aperture_x: float = None


@dataclass(frozen=True)
class ChannelConfig:
    users: int = 6
    sigma_n2: float = 0.02
    rho: float = 1.0
    snr_ratio: float = None


@dataclass(frozen=True)
class DmaConfig:
    Y_g_dma: float = 35.33
    a: float = 0.73
    b: float = 0.17
    kx_Lw: float = 0.75 * np.pi
    R_s: float = 0.1
    coupling_model: str = "default-line"
    termination: str = "closed"
    element_coupling: float = 1.0
    parameterization: str = "resonance"

    def __post_init__(self):
        if self.parameterization not in DMA_PARAMETERIZATIONS:
            raise InvalidArgumentError(f"unknown DMA parameterization {self.parameterization!r}")


@dataclass(frozen=True)
class PowerConfig:
    """Default consumption values; ``P_sat_fd``/``P_sat_other`` multiply ``P/N`` and ``P/N_t``."""

    P_bb: float = 0.040
    P_dac: float = None
    dac_bits: int = 8
    dac_rate: float = 100e6
    P_rf: float = 0.040
    P_ps: float = 0.0218
    P_var: float = 0.0
    eta_a: float = 0.3
    amplifier_model: str = "nonlinear"
    P_sat_fd: float = 5.0
    P_sat_other: float = 3.0
    Y_g_array: object = "matched"

    def consumption(self, P_sat=None):
        return ConsumptionParams(
            P_bb=self.P_bb, P_rf=self.P_rf, P_ps=self.P_ps, P_var=self.P_var,
            dac_bits=self.dac_bits, dac_rate=self.dac_rate, eta_a=self.eta_a,
            amplifier_model=self.amplifier_model, P_sat=P_sat, P_dac_fixed=self.P_dac,
        )


@dataclass(frozen=True)
class Variant:
    """Alternative consumption assumptions evaluated on the same precoders."""

    label: str
    overrides: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SweepConfig:
    antennas: tuple = (2, 4, 8, 12, 16, 20, 24)
    power_dBm: tuple = (10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0)
    spacing: tuple = (0.8, 4 / 7, 0.4, 2 / 7, 0.2)
    variants: tuple = ()


@dataclass(frozen=True)
class Scenario:
    topologies: tuple = TOPOLOGIES
    P_g_max_dBm: float = 30.0
    trials: int = 200
    seed: int = 0
    workers: int = 1
    geometry: GeometryConfig = GeometryConfig()
    channel: ChannelConfig = ChannelConfig()
    dma: DmaConfig = DmaConfig()
    power: PowerConfig = PowerConfig()
    optimizer: OptimizerSettings = OptimizerSettings()
    sweep: SweepConfig = SweepConfig()

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidArgumentError("trials must be >= 1")
        bad = set(self.topologies) - set(TOPOLOGIES)
        if bad or not self.topologies:
            raise InvalidArgumentError(f"unknown topologies {sorted(bad)}")
        if self.channel.users < 1:
            raise InvalidArgumentError("need at least one user")

    @property
    def P_g_max(self):
        return dbm_to_watt(self.P_g_max_dBm)

    def with_(self, **changes):
        """Copy with top-level or ``section.key`` overrides."""
        top = {}
        sections = {}
        for key, value in changes.items():
            if "." in key:
                sec, sub = key.split(".", 1)
                sections.setdefault(sec, {})[sub] = value
            else:
                top[key] = value
        for sec, vals in sections.items():
            top[sec] = replace(getattr(self, sec), **vals)
        return replace(self, **top)


_SECTIONS = {
    "geometry": GeometryConfig,
    "channel": ChannelConfig,
    "dma": DmaConfig,
    "power": PowerConfig,
    "optimizer": OptimizerSettings,
    "sweep": SweepConfig,
}


def _build(cls, values, where):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(values) - names
    if unknown:
        raise InvalidArgumentError(f"unknown keys in [{where}]: {sorted(unknown)}")
    return cls(**values)


def scenario_from_dict(doc):
    doc = dict(doc)
    kwargs = {}
    for name, cls in _SECTIONS.items():
        values = dict(doc.pop(name, {}))
        if name == "sweep":
            for key in ("antennas", "power_dBm", "spacing"):
                if key in values:
                    values[key] = tuple(values[key])
            values["variants"] = tuple(
                Variant(v["label"], {k: x for k, x in v.items() if k != "label"})
                for v in values.get("variants", ())
            )
        kwargs[name] = _build(cls, values, name)
    scen = dict(doc.pop("scenario", {}))
    if "topologies" in scen:
        scen["topologies"] = tuple(scen["topologies"])
    if doc:
        raise InvalidArgumentError(f"unknown sections: {sorted(doc)}")
    names = {f.name for f in dataclasses.fields(Scenario)} - set(_SECTIONS)
    unknown = set(scen) - names
    if unknown:
        raise InvalidArgumentError(f"unknown keys in [scenario]: {sorted(unknown)}")
    return Scenario(**scen, **kwargs)


def load_scenario(path):
    with open(path, "rb") as fh:
        return scenario_from_dict(tomli.load(fh))
