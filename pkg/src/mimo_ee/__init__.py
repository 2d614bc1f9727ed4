"""Energy-efficiency simulator for fully digital, hybrid and DMA MIMO transmitters."""

from .admittance import (
    AdmittanceSet,
    DmaLoadState,
    TransmissionLineTapModel,
    build_dma_structure,
    dma_admittances,
    effective_port_admittance,
    mutual_admittance_array,
)
from .channel import ChannelModelParams, build_covariance, sample_channel
from .geometry import build_constants, build_layout, build_waveguide, fixed_aperture_layout
from .optim import OptimizerSettings
from .power import ConsumptionParams, amplifier_power, dac_power, sum_rate_and_ee, total_power
from .precoding import mse_dma, mse_hybrid, wf_dma, wf_fd, wf_hybrid
from .topology import PhaseNetwork, effective_channel_array, effective_channel_dma, supplied_power

__version__ = "0.1.0"
