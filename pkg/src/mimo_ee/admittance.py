"""Coupling and admittance matrices for antenna arrays and DMAs.

Arrays are modelled as z-oriented magnetic dipoles over a conducting plane.
A DMA is a stack of waveguides, each fed by one transmitter, carrying a row
of tunable radiating elements.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._linalg import LU
from .errors import InvalidArgumentError, InvalidGeometryError
from .geometry import ArrayLayout, build_waveguide

__all__ = [
    "green_zz",
    "mutual_admittance_array",
    "DmaLoadState",
    "AdmittanceSet",
    "WaveguideCouplingModel",
    "TransmissionLineTapModel",
    "DmaStructure",
    "build_dma_structure",
    "dma_admittances",
    "effective_port_admittance",
    "coupling_model",
]


def green_zz(displacement, k):
    """zz-component of the free-space dyadic Green's function (exp(-ikR) convention).

    Parameters
    ----------
    displacement : ndarray, shape (..., 3)
        Vectors ``r - r'``; must be non-zero.
    k : float
        Wavenumber.
    """
    d = np.asarray(displacement, dtype=float)
    r = np.linalg.norm(d, axis=-1)
    x = k * r
    cos2 = (d[..., 2] / r) ** 2
    g = np.exp(-1j * x) / (4 * np.pi * r)
    inv = 1 / x
    return g * ((1 - 1j * inv - inv**2) + (-1 + 3j * inv + 3 * inv**2) * cos2)


def mutual_admittance_array(layout, consts):
    """Coupling matrix of the array.

    Off-diagonal entries are ``i 2 w eps G_zz(r_n, r_n')``; the diagonal is the
    radiation self-admittance ``k w eps / (3 pi)``, which is also the limit of
    the off-diagonal real part as the separation goes to zero.
    """
    pos = layout.positions if isinstance(layout, ArrayLayout) else np.asarray(layout, dtype=float)
    n = pos.shape[0]
    d = pos[:, None, :] - pos[None, :, :]
    iu = np.triu_indices(n, 1)
    dist = np.linalg.norm(d[iu], axis=-1)
    if np.any(dist <= 1e-12 * consts.wavelength):
        raise InvalidGeometryError("coincident antenna positions")
    y = np.empty((n, n), dtype=complex)
    vals = 2j * consts.angular_frequency * consts.permittivity * green_zz(d[iu], consts.wavenumber)
    y[iu] = vals
    y[(iu[1], iu[0])] = vals
    np.fill_diagonal(y, consts.self_admittance)
    return y


@dataclass(frozen=True)
class DmaLoadState:
    y_im: np.ndarray
    r_s: float = 0.1

    def __post_init__(self):
        y = np.asarray(self.y_im, dtype=float)
        if y.ndim != 1 or not np.all(np.isfinite(y)):
            raise InvalidArgumentError("y_im must be a finite vector")
        if not self.r_s > 0:
            raise InvalidArgumentError("R_s must be positive")
        object.__setattr__(self, "y_im", y)

    @property
    def Y_s(self):
        return np.diag(self.r_s + 1j * self.y_im)


class WaveguideCouplingModel(ABC):
    """Strategy returning the waveguide-mediated admittances of one row.

    ``positions`` are element distances from the feed wall (metres).  The
    return value is ``(y_tt, y_st, y_ss)``: the scalar port self-admittance,
    the port-to-element vector and the element-to-element block.
    """

    name = "abstract"

    @abstractmethod
    def row_admittances(self, positions, waveguide):
        ...


class TransmissionLineTapModel(WaveguideCouplingModel):
    """TE10 line tapped by shunt elements.

    ``termination="closed"`` treats the guide as a lossless cavity between
    the feed wall and a reflecting far wall, so the port sees
    ``-i Y0 cot(k_x L)``.  ``termination="matched"`` absorbs the wave at the
    far end and the port sees ``Y0``.  ``element_coupling`` scales the
    element-to-guide coupling relative to the feed.
    """

    name = "default-line"

    def __init__(self, termination="closed", element_coupling=1.0):
        if termination not in ("closed", "matched"):
            raise InvalidArgumentError(f"unknown termination {termination!r}")
        self.termination = termination
        self.element_coupling = float(element_coupling)

    def _kernel(self, x1, x2, wg):
        kx = wg.guided_wavenumber
        lo = np.minimum(x1, x2)
        hi = np.maximum(x1, x2)
        y0 = wg.characteristic_admittance
        if self.termination == "closed":
            kl = kx * wg.length
            return -1j * y0 * np.cos(kx * lo) * np.cos(kx * (wg.length - hi)) / np.sin(kl)
        return y0 * np.cos(kx * lo) * np.exp(-1j * kx * hi)

    def row_admittances(self, positions, waveguide):
        x = np.asarray(positions, dtype=float)
        if np.any(x <= 0) or np.any(x >= waveguide.length):
            raise InvalidGeometryError("elements must lie strictly inside the waveguide")
        c = self.element_coupling
        y_tt = self._kernel(0.0, 0.0, waveguide)
        y_st = c * self._kernel(x, 0.0, waveguide)
        y_ss = c**2 * self._kernel(x[:, None], x[None, :], waveguide)
        return complex(y_tt), y_st, y_ss


_MODELS = {"default-line": TransmissionLineTapModel}


def coupling_model(name="default-line", **options):
    try:
        cls = _MODELS[name]
    except KeyError:
        raise InvalidArgumentError(
            f"unknown waveguide coupling model {name!r}; available: {sorted(_MODELS)}"
        ) from None
    return cls(**options)


@dataclass(frozen=True)
class AdmittanceSet:
    """Admittances of one topology instance.

    For ``"fd"`` and ``"hybrid"`` only ``Y_aa`` is set; for ``"dma"`` the
    waveguide/element matrices and the load are set and ``Y_p`` is derived.
    """

    topology: str
    Y_g: float
    Y_aa: np.ndarray = None
    Y_tt: np.ndarray = None
    Y_st: np.ndarray = None
    Y_ss: np.ndarray = None
    load: DmaLoadState = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def Y_s(self):
        return None if self.load is None else self.load.Y_s

    def element_factor(self):
        """LU factorization of ``Y_s + Y_ss``."""
        if "lu" not in self._cache:
            self._cache["lu"] = LU(self.Y_ss + self.Y_s, "Y_s + Y_ss")
        return self._cache["lu"]

    @property
    def Y_p(self):
        if self.topology != "dma":
            raise InvalidArgumentError("Y_p is only defined for DMA admittance sets")
        if "Y_p" not in self._cache:
            zy = self.element_factor().solve(self.Y_st)
            self._cache["Z_Y_st"] = zy
            self._cache["Y_p"] = self.Y_tt - self.Y_st.T @ zy
        return self._cache["Y_p"]


def effective_port_admittance(admittances):
    """``Y_p = Y_tt - Y_st^T (Y_s + Y_ss)^{-1} Y_st``."""
    return admittances.Y_p


@dataclass(frozen=True)
class DmaStructure:
    """Load-independent part of a DMA: everything except ``Y_s``."""

    Y_tt: np.ndarray
    Y_st: np.ndarray
    Y_ss: np.ndarray
    Y_g: float
    r_s: float
    feed_map: np.ndarray
    waveguide: object = None

    @property
    def n_elements(self):
        return self.Y_ss.shape[0]

    @property
    def n_transmitters(self):
        return self.Y_tt.shape[0]

    def with_load(self, y_im):
        load = DmaLoadState(np.asarray(y_im, dtype=float), self.r_s)
        if load.y_im.shape[0] != self.n_elements:
            raise InvalidArgumentError("y_im length does not match the number of elements")
        return AdmittanceSet("dma", self.Y_g, Y_tt=self.Y_tt, Y_st=self.Y_st, Y_ss=self.Y_ss, load=load)


def build_dma_structure(layout, consts, waveguide=None, model=None, r_s=0.1, Y_g=35.33):
    """Assemble ``Y_tt``, ``Y_st`` and ``Y_ss`` for a layout of stacked waveguides.

    Row ``t`` of the layout sits on waveguide ``t``.  ``Y_ss`` is the sum of
    the guide-mediated block for each row and free-space coupling between
    all elements.  When ``waveguide`` is None, a guide with the default cross-section is sized to
    the row with half a spacing of clearance at each end.
    """
    model = model or TransmissionLineTapModel()
    if waveguide is None:
        extent = (layout.n_per_tx - 1) * layout.spacing_x
        waveguide = build_waveguide(consts, extent, feed_offset=layout.spacing_x / 2,
                                    characteristic_admittance=Y_g)
    n, nt = layout.n_antennas, layout.n_transmitters
    y_ss = mutual_admittance_array(layout, consts)
    y_st = np.zeros((n, nt), dtype=complex)
    y_tt = np.zeros((nt, nt), dtype=complex)
    for t in range(nt):
        sl = layout.row(t)
        xs = layout.positions[sl, 0]
        local = xs - xs[0] + waveguide.feed_offset
        tt, st, ss = model.row_admittances(local, waveguide)
        y_tt[t, t] = tt
        y_st[sl, t] = st
        y_ss[sl, sl] += ss
    return DmaStructure(y_tt, y_st, y_ss, float(Y_g), float(r_s), layout.feed_map, waveguide)


def dma_admittances(layout, waveguide, consts, load, model=None, Y_g=35.33):
    structure = build_dma_structure(layout, consts, waveguide, model, load.r_s, Y_g)
    return structure.with_load(load.y_im)
