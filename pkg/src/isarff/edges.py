"""Speckle-robust gradients by ratio of one-sided exponential means.

Difference-based gradient kernels false-alarm on bright speckle; the
ratio of exponentially weighted means on opposite sides of a pixel is
contrast-invariant instead.  Gradients are log ratios, so scaling the
whole image cancels exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage, signal

from .isar_sim import IntensityFrame

AMPLITUDE_FLOOR_FRACTION = 1e-6
DEFAULT_SMOOTHING = 0.73
DEFAULT_MIN_AREA = 12

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass
class GradientField:
    """Per-pixel gradient components, magnitude, direction and mask."""

    gx: np.ndarray
    gy: np.ndarray
    magnitude: np.ndarray
    direction: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        shape = self.gx.shape
        for grid in (self.gy, self.magnitude, self.direction, self.mask):
            if grid.shape != shape:
                raise ValueError("gradient field grids must share one shape")


def _one_sided_means(amplitude: np.ndarray, b: float):
    """Exponentially weighted means strictly left and right of each pixel.

    Weights b**k favour near pixels; truncated sums are renormalized so a
    constant image gives equal means everywhere.  Boundary pixels with an
    empty side fall back to their own value.
    """
    n = amplitude.shape[-1]
    # num[i] = a[i-1] + b*num[i-1] realized as an IIR filter along the axis
    num_left = signal.lfilter([0.0, 1.0], [1.0, -b], amplitude, axis=-1)
    num_right = signal.lfilter([0.0, 1.0], [1.0, -b], amplitude[..., ::-1], axis=-1)[..., ::-1]
    counts = np.arange(n, dtype=float)
    den = (1.0 - b ** counts) / (1.0 - b)
    left = np.empty_like(amplitude)
    right = np.empty_like(amplitude)
    left[..., 1:] = num_left[..., 1:] / den[1:]
    left[..., 0] = amplitude[..., 0]
    right[..., :-1] = num_right[..., :-1] / den[1:][::-1]
    right[..., -1] = amplitude[..., -1]
    return left, right


def roewa_gradients(frame, b: float = DEFAULT_SMOOTHING):
    """Log-ratio gradients (gx, gy) of an intensity frame.

    ``frame`` may be an IntensityFrame (dB pixels, converted to linear
    amplitude with a relative floor) or a 2D array already in positive
    linear amplitude.  gx is log(right mean / left mean) so an edge rising
    towards +x responds positively; gy likewise towards +y (down).
    """
    if not 0.0 < b < 1.0:
        raise ValueError("smoothing coefficient b must be in (0, 1)")
    if isinstance(frame, IntensityFrame):
        amplitude = 10.0 ** (frame.pixels / 20.0)
    else:
        amplitude = np.asarray(frame, dtype=float)
    if amplitude.ndim != 2:
        raise ValueError("expected a 2D image")
    peak = amplitude.max()
    if peak > 0:
        amplitude = np.maximum(amplitude, AMPLITUDE_FLOOR_FRACTION * peak)
    if np.any(amplitude <= 0.0):
        raise ValueError("amplitudes must be positive after flooring")
    left, right = _one_sided_means(amplitude, b)
    gx = np.log(right / left)
    up, down = _one_sided_means(amplitude.T, b)
    gy = np.log(down / up).T
    return gx, gy


def gradient_magnitude_direction(gx: np.ndarray, gy: np.ndarray):
    """Magnitude sqrt(gx^2+gy^2) and direction in (-pi, pi].

    Direction is the angle of the (gx, gy) vector, so a rising edge whose
    normal points along +x maps to 0 and its falling mirror to pi.  A zero
    gradient has direction 0 by convention.
    """
    gx = np.asarray(gx, dtype=float)
    gy = np.asarray(gy, dtype=float)
    if gx.shape != gy.shape:
        raise ValueError("gradient components must share one shape")
    magnitude = np.hypot(gx, gy)
    direction = np.arctan2(gy, gx)
    direction = np.where(direction <= -np.pi, direction + 2.0 * np.pi, direction)
    return magnitude, direction


def otsu_threshold(values: np.ndarray, bins: int = 256, value_range=None) -> float:
    """Threshold maximizing between-class variance on a uniform histogram.

    Returns the left edge of the upper class; ties resolve to the lowest
    split.  Raises ValueError when the histogram is degenerate.
    """
    flat = np.asarray(values, dtype=float).ravel()
    if flat.size == 0 or not np.all(np.isfinite(flat)):
        raise ValueError("otsu requires finite, non-empty input")
    lo, hi = value_range if value_range is not None else (flat.min(), flat.max())
    if not hi > lo:
        raise ValueError("otsu histogram range is degenerate")
    hist, edges = np.histogram(flat, bins=bins, range=(lo, hi))
    hist = hist.astype(float)
    total = hist.sum()
    centres = 0.5 * (edges[:-1] + edges[1:])
    w0 = np.cumsum(hist)[:-1]
    w1 = total - w0
    mass = np.cumsum(hist * centres)
    m0 = np.divide(mass[:-1], w0, out=np.zeros(bins - 1), where=w0 > 0)
    m1 = np.divide(mass[-1] - mass[:-1], w1, out=np.zeros(bins - 1), where=w1 > 0)
    sigma_b = w0 * w1 * (m0 - m1) ** 2
    sigma_b[(w0 == 0) | (w1 == 0)] = -np.inf
    split = int(np.argmax(sigma_b))
    return float(edges[split + 1])


def remove_small_components(mask: np.ndarray, min_area: int) -> np.ndarray:
    """Drop 8-connected components smaller than min_area pixels."""
    labels, count = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    if count == 0:
        return np.zeros_like(mask, dtype=bool)
    areas = np.bincount(labels.ravel())
    keep = areas >= min_area
    keep[0] = False
    return keep[labels]


def significance_mask(magnitude: np.ndarray, min_area: int = DEFAULT_MIN_AREA) -> np.ndarray:
    """Otsu-threshold the gradient magnitude and drop small components.

    An all-zero magnitude yields an empty mask (the frame simply
    contributes no features).
    """
    magnitude = np.asarray(magnitude, dtype=float)
    if not np.all(np.isfinite(magnitude)):
        raise ValueError("gradient magnitude must be finite")
    peak = magnitude.max()
    if peak <= 0.0:
        return np.zeros(magnitude.shape, dtype=bool)
    threshold = otsu_threshold(magnitude, value_range=(0.0, peak))
    return remove_small_components(magnitude >= threshold, min_area)


def compute_gradient_field(
    frame: IntensityFrame,
    b: float = DEFAULT_SMOOTHING,
    min_area: int = DEFAULT_MIN_AREA,
) -> GradientField:
    gx, gy = roewa_gradients(frame, b)
    magnitude, direction = gradient_magnitude_direction(gx, gy)
    mask = significance_mask(magnitude, min_area)
    return GradientField(gx=gx, gy=gy, magnitude=magnitude, direction=direction, mask=mask)
