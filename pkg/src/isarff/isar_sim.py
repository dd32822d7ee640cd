"""Backscatter synthesis and 2D Fourier image formation.

The backscattered field of a point-scatterer set is the coherent sum
A_i * exp(-j 2 kvec . r_i) sampled on a (frequency, aspect angle) grid.
The complex image is the 2D inverse transform of that phase history with
the kernel exp(-j 2 k x) * exp(-j 2 k_c phi y); the image axes are
relabelled so a scatterer at scene (x, y) peaks at scene (x, y).

Range resolution is c/(2B); cross-range resolution is c/(2 f_c Omega).
Frequency samples are placed at bin centres tiling [f_c - B/2, f_c + B/2]
(step B/M) and angles at bin centres tiling the integration angle, which
makes the pixel spacings exactly the resolutions divided by the zero-pad
factor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scene import EncounterConfig, FrameAperture

C_LIGHT = 299792458.0

WINDOW_KINDS = ("none", "hanning")


@dataclass
class PhaseHistory:
    """Complex backscatter samples indexed (frequency, angle)."""

    samples: np.ndarray
    frequencies: np.ndarray
    angles: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.angles = np.asarray(self.angles, dtype=float)
        if self.samples.ndim != 2:
            raise ValueError("phase history must be a 2D grid")
        if self.samples.shape != (self.frequencies.size, self.angles.size):
            raise ValueError("phase history grid does not match axis lengths")
        if self.frequencies.size > 1 and not np.all(np.diff(self.frequencies) > 0):
            raise ValueError("frequencies must be strictly increasing")


@dataclass
class ComplexFrame:
    """Complex ISAR image; rows = cross-range (y, down), cols = range (x)."""

    pixels: np.ndarray
    range_spacing: float
    crossrange_spacing: float
    frame_index: int = 0

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=complex)
        if self.pixels.ndim != 2:
            raise ValueError("frame pixels must be 2D")
        ratio = self.range_spacing / self.crossrange_spacing
        if not 0.99 <= ratio <= 1.01:
            raise ValueError(
                f"resolution cells must be square within 1% (got ratio {ratio:.4f})"
            )


@dataclass
class IntensityFrame:
    """Log-magnitude rendering in dB, clipped to [-dynamic range, 0]."""

    pixels: np.ndarray
    range_spacing: float
    crossrange_spacing: float
    frame_index: int = 0
    floor_db: float | None = None

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=float)
        if self.pixels.ndim != 2:
            raise ValueError("frame pixels must be 2D")

    @property
    def shape(self):
        return self.pixels.shape

    def fill_value(self) -> float:
        return float(self.floor_db) if self.floor_db is not None else float(self.pixels.min())


def encounter_axes(config: EncounterConfig, aperture: FrameAperture | None = None):
    """Frequency (Hz) and angle (rad) sample axes for one frame aperture.

    Angles are relative to the aperture centre, so the projected scatterer
    coordinates and these axes share one reference direction.
    """
    m = config.frequency_samples
    n = config.angle_samples_per_frame
    df = config.bandwidth_hz / m
    frequencies = config.centre_frequency_hz + (np.arange(m) - (m - 1) / 2.0) * df
    omega = np.deg2rad(config.integration_angle_deg)
    dphi = omega / n
    angles = (np.arange(n) - (n - 1) / 2.0) * dphi
    return frequencies, angles


def backscatter_field(scatterers, frequencies, angles) -> PhaseHistory:
    """Coherent point-scatterer sum over a (frequency, angle) grid.

    ``scatterers`` is an (n, 3) array of (x, y, amplitude) in the slant
    plane.  An empty scatterer list yields a zero field.
    """
    frequencies = np.asarray(frequencies, dtype=float)
    angles = np.asarray(angles, dtype=float)
    if frequencies.size == 0 or angles.size == 0:
        raise ValueError("frequency and angle axes must be non-empty")
    scatterers = np.asarray(scatterers, dtype=float).reshape(-1, 3)
    k = 2.0 * np.pi * frequencies / C_LIGHT
    samples = np.zeros((frequencies.size, angles.size), dtype=complex)
    if scatterers.shape[0] == 0:
        return PhaseHistory(samples, frequencies, angles)
    cos_a = np.cos(angles)
    sin_a = np.sin(angles)
    # projection of each scatterer onto the look direction at every angle
    proj = scatterers[:, 0:1] * cos_a[None, :] + scatterers[:, 1:2] * sin_a[None, :]
    chunk = 64
    for start in range(0, scatterers.shape[0], chunk):
        p = proj[start : start + chunk]
        amps = scatterers[start : start + chunk, 2]
        phase = k[None, :, None] * p[:, None, :]
        samples += np.sum(amps[:, None, None] * np.exp(-2j * phase), axis=0)
    return PhaseHistory(samples, frequencies, angles)


def range_resolution(bandwidth_hz: float) -> float:
    """c / (2 B)."""
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth must be positive")
    return C_LIGHT / (2.0 * bandwidth_hz)


def cross_range_resolution(centre_frequency_hz: float, integration_angle_rad: float) -> float:
    """c / (2 f_c Omega), with the integration angle in radians."""
    if centre_frequency_hz <= 0 or integration_angle_rad <= 0:
        raise ValueError("centre frequency and integration angle must be positive")
    return C_LIGHT / (2.0 * centre_frequency_hz * integration_angle_rad)


def form_image(
    history: PhaseHistory,
    window: str = "hanning",
    zero_pad_factor: int = 1,
    frame_index: int = 0,
) -> ComplexFrame:
    """Form the complex image from a phase history.

    The transform is unitary, so with window "none" and no padding the
    image energy equals the phase-history energy exactly (Parseval
    constant 1).  Pixel spacings are the resolutions implied by the axis
    steps divided by the zero-pad factor.
    """
    if window not in WINDOW_KINDS:
        raise ValueError(f"window must be one of {WINDOW_KINDS}")
    if zero_pad_factor < 1:
        raise ValueError("zero_pad_factor must be >= 1")
    m, n = history.samples.shape
    if m < 2 or n < 2:
        raise ValueError("phase history must be at least 2x2 to form an image")
    df = np.diff(history.frequencies)
    dphi = np.diff(history.angles)
    if not (np.allclose(df, df[0]) and np.allclose(dphi, dphi[0])):
        raise ValueError("image formation requires uniformly sampled axes")
    df = float(df[0])
    dphi = float(dphi[0])
    fc = float(history.frequencies.mean())
    kc = 2.0 * np.pi * fc / C_LIGHT
    dk = 2.0 * np.pi * df / C_LIGHT

    data = history.samples
    if window == "hanning":
        data = data * (np.hanning(m)[:, None] * np.hanning(n)[None, :])

    nr = zero_pad_factor * m
    na = zero_pad_factor * n
    padded = np.zeros((nr, na), dtype=complex)
    padded[:m, :n] = data
    image = np.fft.fft2(padded, norm="ortho")

    dx = C_LIGHT / (2.0 * df * nr)
    dy = C_LIGHT / (2.0 * fc * dphi * na)
    xs = np.arange(nr) * dx
    ys = np.arange(na) * dy
    # restore the kernel phases the FFT does not carry: the centre
    # wavenumber in range and the axis-centring offsets of both axes
    image *= np.exp(-2j * (kc - dk * (m - 1) / 2.0) * xs)[:, None]
    image *= np.exp(1j * kc * dphi * (n - 1) * ys)[None, :]

    # relabel to scene coordinates: index i maps to x = (i - N//2) * dx
    idx_r = (-(np.arange(nr) - nr // 2)) % nr
    idx_c = (-(np.arange(na) - na // 2)) % na
    scene = image[np.ix_(idx_r, idx_c)]
    return ComplexFrame(
        pixels=scene.T.copy(),
        range_spacing=dx,
        crossrange_spacing=dy,
        frame_index=frame_index,
    )


def to_intensity(frame: ComplexFrame, dynamic_range_db: float = 50.0) -> IntensityFrame:
    """Normalized log-magnitude in dB, clipped to [-dynamic_range, 0].

    An all-zero frame maps to a uniform floor at -dynamic_range.
    """
    if dynamic_range_db <= 0:
        raise ValueError("dynamic range must be positive")
    mag = np.abs(frame.pixels)
    peak = mag.max()
    if peak == 0.0:
        db = np.full(mag.shape, -dynamic_range_db)
    else:
        with np.errstate(divide="ignore"):
            db = 20.0 * np.log10(mag / peak)
        db = np.clip(db, -dynamic_range_db, 0.0)
    return IntensityFrame(
        pixels=db,
        range_spacing=frame.range_spacing,
        crossrange_spacing=frame.crossrange_spacing,
        frame_index=frame.frame_index,
        floor_db=-dynamic_range_db,
    )
