"""Physical constants, element placement and waveguide dimensions."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

SPEED_OF_LIGHT = 2.998e8
VACUUM_PERMITTIVITY = 8.854e-12


@dataclass(frozen=True)
class PhysicalConstants:
    frequency: float
    wavelength: float
    wavenumber: float
    angular_frequency: float
    permittivity: float = VACUUM_PERMITTIVITY

    @property
    def self_admittance(self):
        """Radiation self-admittance ``k w eps / (3 pi)`` of one dipole over ground."""
        return self.wavenumber * self.angular_frequency * self.permittivity / (3 * np.pi)

    @property
    def alpha_r(self):
        """Receive-side scaling ``sqrt(3 pi / (k w eps))``."""
        return np.sqrt(1.0 / self.self_admittance)


def build_constants(frequency, permittivity=VACUUM_PERMITTIVITY):
    if not frequency > 0:
        raise InvalidArgumentError(f"frequency must be positive, got {frequency}")
    if not permittivity > 0:
        raise InvalidArgumentError(f"permittivity must be positive, got {permittivity}")
    wavelength = SPEED_OF_LIGHT / frequency
    return PhysicalConstants(
        frequency=float(frequency),
        wavelength=wavelength,
        wavenumber=2 * np.pi / wavelength,
        angular_frequency=2 * np.pi * frequency,
        permittivity=float(permittivity),
    )


@dataclass(frozen=True)
class ArrayLayout:
    """Antenna positions on a rectangular grid in the xz-plane.

    Transmitter ``t`` owns antennas ``t * n_per_tx ... (t + 1) * n_per_tx - 1``,
    laid out along x at height ``z = t * spacing_z``.
    """

    positions: np.ndarray
    n_transmitters: int
    n_per_tx: int
    spacing_x: float
    spacing_z: float

    @property
    def n_antennas(self):
        return self.positions.shape[0]

    @property
    def feed_map(self):
        return np.repeat(np.arange(self.n_transmitters), self.n_per_tx)

    def row(self, t):
        return slice(t * self.n_per_tx, (t + 1) * self.n_per_tx)

    @property
    def aperture_x(self):
        """Row extent counting one spacing-wide cell per antenna."""
        return self.n_per_tx * self.spacing_x


def build_layout(n_transmitters, n_per_tx, spacing_x, spacing_z):
    if n_transmitters < 1 or n_per_tx < 1:
        raise InvalidArgumentError("transmitter and per-transmitter counts must be >= 1")
    if not (spacing_x > 0 and spacing_z > 0):
        raise InvalidArgumentError("spacings must be positive")
    cols = np.arange(n_per_tx) * spacing_x
    rows = np.arange(n_transmitters) * spacing_z
    x = np.tile(cols, n_transmitters)
    z = np.repeat(rows, n_per_tx)
    positions = np.column_stack([x, np.zeros_like(x), z])
    return ArrayLayout(positions, int(n_transmitters), int(n_per_tx), float(spacing_x), float(spacing_z))


def fixed_aperture_layout(n_transmitters, spacing_x, aperture_x, spacing_z):
    """Layout whose rows fill ``aperture_x`` with cells of width ``spacing_x``."""
    n_per_tx = int(round(aperture_x / spacing_x))
    if n_per_tx < 1:
        raise InvalidArgumentError(f"aperture {aperture_x} too small for spacing {spacing_x}")
    return build_layout(n_transmitters, n_per_tx, aperture_x / n_per_tx, spacing_z)


@dataclass(frozen=True)
class WaveguideSpec:
    """Rectangular waveguide carrying only the TE10 mode.

    ``length`` runs from the feed wall to the far wall; ``feed_offset`` is the
    distance from the feed wall to the first element.
    """

    width: float
    height: float
    length: float
    guided_wavenumber: float
    characteristic_admittance: float = 35.33
    feed_offset: float = 0.0

    @property
    def electrical_length(self):
        return self.guided_wavenumber * self.length


def guided_wavenumber(consts, width):
    cutoff = np.pi / width
    if not consts.wavelength / 2 < width < consts.wavelength:
        raise InvalidArgumentError(
            f"width {width / consts.wavelength:.3f} lambda is outside the single-mode band (0.5, 1)"
        )
    return np.sqrt(consts.wavenumber**2 - cutoff**2)


def build_waveguide(consts, row_extent=0.0, feed_offset=None, width=0.73, height=0.17,
                    characteristic_admittance=35.33, electrical_length=0.75 * np.pi):
    """Waveguide sized to hold a row of elements spanning ``row_extent`` metres.

    ``width`` and ``height`` are in wavelengths.  The length is the shortest
    ``L`` with ``k_x L = electrical_length (mod pi)`` that leaves ``feed_offset``
    clearance at both ends of the row.
    """
    a = width * consts.wavelength
    b = height * consts.wavelength
    kx = guided_wavenumber(consts, a)
    if feed_offset is None:
        feed_offset = consts.wavelength / 4
    need = row_extent + 2 * feed_offset
    m = max(0, int(np.ceil((kx * need - electrical_length) / np.pi - 1e-12)))
    length = (electrical_length + m * np.pi) / kx
    return WaveguideSpec(a, b, length, kx, characteristic_admittance, feed_offset)
