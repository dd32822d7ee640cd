"""Line detection in (rho, theta) space with gradient-weighted voting.

Lines are parameterized as rho = x cos(theta) + y sin(theta) with x the
column offset from the image centre (rightward) and y the row offset
(downward).  The weighted transform votes over the full (-180, 180]
degree range: each masked pixel contributes its gradient magnitude times
a Gaussian agreement between the candidate angle and the pixel's edge
direction, so a rising edge and its falling mirror land 180 degrees
apart instead of folding together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

RHO_BIN_PX = 1.0
THETA_BIN_DEG = 1.0
DEFAULT_SIGMA_DIR_DEG = 10.0
DEFAULT_MIN_FRACTION = 0.3
DEFAULT_NHOOD = (5, 5)
DEFAULT_GAP_TOLERANCE = 3
DEFAULT_MIN_LENGTH = 12


@dataclass
class HoughAccumulator:
    values: np.ndarray
    rho_axis: np.ndarray
    theta_axis: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.rho_axis.size, self.theta_axis.size):
            raise ValueError("accumulator shape does not match axes")


@dataclass
class LineFeature:
    """One detected line: (rho, theta) peak plus its supporting segments.

    Segments are (t_start, t_end) intervals of the along-line parameter t,
    measured in pixels from the line's foot point.
    """

    rho: float
    theta: float
    strength: float
    segments: list = field(default_factory=list)
    frame_index: int = 0


def centre_offsets(shape):
    """Pixel coordinate offsets (x cols, y rows) from the image centre."""
    h, w = shape
    return np.arange(w) - w // 2, np.arange(h) - h // 2


def rho_axis_for_shape(shape) -> np.ndarray:
    h, w = shape
    reach = int(math.ceil(math.hypot(w // 2, h // 2)))
    return np.arange(-reach, reach + 1, dtype=float) * RHO_BIN_PX


def theta_axis(n_bins: int, lo_deg: float, hi_deg: float) -> np.ndarray:
    """n uniform angle samples over (lo, hi], including the upper bound."""
    step = (hi_deg - lo_deg) / n_bins
    return lo_deg + step * np.arange(1, n_bins + 1)


def wrap_degrees(angles):
    """Wrap to (-180, 180]."""
    wrapped = np.mod(np.asarray(angles, dtype=float) + 180.0, 360.0) - 180.0
    return np.where(wrapped == -180.0, 180.0, wrapped)


def _mask_coordinates(mask):
    mask = np.asarray(mask, dtype=bool)
    rows, cols = np.nonzero(mask)
    xs, ys = centre_offsets(mask.shape)
    return xs[cols].astype(float), ys[rows].astype(float)


def _rho_axis(n_bins: int, shape) -> np.ndarray:
    full = rho_axis_for_shape(shape)
    if n_bins >= full.size:
        return full
    # trim symmetrically, keeping bin width fixed at one pixel
    drop = (full.size - n_bins) // 2
    return full[drop : drop + n_bins]


def _vote(x, y, weights, thetas, rho_axis):
    """Accumulate per-pixel, per-angle weights along each pixel's sinusoid."""
    values = np.zeros((rho_axis.size, thetas.size))
    rad = np.deg2rad(thetas)
    # rounding rho before indexing keeps bin assignment independent of the
    # axis offset, so a trimmed axis is an exact slice of the full one
    first_bin = round(rho_axis[0] / RHO_BIN_PX)
    for t, (c, s) in enumerate(zip(np.cos(rad), np.sin(rad))):
        rho = x * c + y * s
        bins = np.rint(rho / RHO_BIN_PX).astype(int) - first_bin
        inside = (bins >= 0) & (bins < rho_axis.size)  # trimmed axes drop outer votes
        np.add.at(values[:, t], bins[inside], weights[inside, t])
    return values


def standard_hough(mask, rho_bins: int | None = None, theta_bins: int = 180) -> HoughAccumulator:
    """Classic transform: every mask pixel votes 1 over theta in (0, 180]."""
    mask = np.asarray(mask, dtype=bool)
    rho = rho_axis_for_shape(mask.shape) if rho_bins is None else _rho_axis(rho_bins, mask.shape)
    thetas = theta_axis(theta_bins, 0.0, 180.0)
    x, y = _mask_coordinates(mask)
    weights = np.ones((x.size, thetas.size))
    return HoughAccumulator(_vote(x, y, weights, thetas, rho), rho, thetas)


def weighted_hough(
    mask,
    magnitude,
    direction,
    sigma_dir_deg: float = DEFAULT_SIGMA_DIR_DEG,
    rho_bins: int | None = None,
    theta_bins: int = 360,
    direction_weighting: str = "gaussian",
) -> HoughAccumulator:
    """Magnitude- and direction-weighted transform over (-180, 180].

    Each pixel's vote at angle theta is G(x, y) * D(theta), where D is a
    Gaussian over the wrapped angular distance to the pixel's edge
    direction, normalized to unit sum over the theta axis.  With
    ``direction_weighting="uniform"`` D is replaced by 1, which reduces
    the transform to the classic one when G is 1.
    """
    if sigma_dir_deg <= 0:
        raise ValueError("sigma_dir_deg must be positive")
    if direction_weighting not in ("gaussian", "uniform"):
        raise ValueError("direction_weighting must be 'gaussian' or 'uniform'")
    mask = np.asarray(mask, dtype=bool)
    magnitude = np.asarray(magnitude, dtype=float)
    direction = np.asarray(direction, dtype=float)
    if magnitude.shape != mask.shape or direction.shape != mask.shape:
        raise ValueError("mask, magnitude and direction must be co-registered")
    rho = rho_axis_for_shape(mask.shape) if rho_bins is None else _rho_axis(rho_bins, mask.shape)
    thetas = theta_axis(theta_bins, -180.0, 180.0)
    x, y = _mask_coordinates(mask)
    g = magnitude[mask]
    if direction_weighting == "uniform":
        weights = np.broadcast_to(g[:, None], (g.size, thetas.size)).copy()
    else:
        pixel_dirs = np.rad2deg(direction[mask])
        delta = wrap_degrees(thetas[None, :] - pixel_dirs[:, None])
        d_gauss = np.exp(-0.5 * (delta / sigma_dir_deg) ** 2)
        d_gauss /= d_gauss.sum(axis=1, keepdims=True)
        weights = g[:, None] * d_gauss
    return HoughAccumulator(_vote(x, y, weights, thetas, rho), rho, thetas)


def detect_peaks(
    acc: HoughAccumulator,
    min_fraction: float = DEFAULT_MIN_FRACTION,
    nhood=DEFAULT_NHOOD,
) -> list[tuple[float, float, float]]:
    """Greedy non-maximum suppression over the accumulator.

    Repeatedly takes the global maximum at or above min_fraction times
    the accumulator maximum and zeroes its (rho, theta) neighbourhood,
    wrapping theta cyclically.  Ties break to the lowest rho bin, then
    the lowest theta bin.  The reported rho is refined to the vote-mass
    centroid of the peak bin and its immediate rho neighbours, so line
    positions are not limited to the bin pitch.
    """
    if not 0.0 < min_fraction <= 1.0:
        raise ValueError("min_fraction must be in (0, 1]")
    values = acc.values.copy()
    peak0 = values.max()
    if peak0 <= 0.0:
        return []
    threshold = min_fraction * peak0
    n_rho, n_theta = values.shape
    half_rho, half_theta = int(nhood[0]), int(nhood[1])
    peaks = []
    while True:
        flat = int(np.argmax(values))
        i, j = divmod(flat, n_theta)
        strength = values[i, j]
        if strength < threshold:
            break
        lo, hi = max(0, i - 1), min(n_rho, i + 2)
        mass = values[lo:hi, j]
        rho = float(np.sum(acc.rho_axis[lo:hi] * mass) / np.sum(mass))
        peaks.append((rho, float(acc.theta_axis[j]), float(strength)))
        r0 = max(0, i - half_rho)
        r1 = min(n_rho, i + half_rho + 1)
        cols = np.unique((j + np.arange(-half_theta, half_theta + 1)) % n_theta)
        values[r0:r1, cols] = 0.0
    return peaks


def localize_feature(
    mask,
    rho: float,
    theta_deg: float,
    gap_tolerance: int = DEFAULT_GAP_TOLERANCE,
    min_length: int = DEFAULT_MIN_LENGTH,
    direction=None,
    direction_tol_deg: float = 30.0,
) -> list[tuple[int, int]]:
    """Runs of mask pixels along the line (rho, theta).

    Mask pixels within perpendicular distance 1 of the line are projected
    onto the along-line parameter t; runs separated by at most
    gap_tolerance are merged and runs shorter than min_length dropped.
    Returns (t_start, t_end) intervals; an empty list if the line misses
    the mask.

    When a gradient ``direction`` grid (radians) is given, only pixels
    whose edge direction agrees with theta within direction_tol_deg count
    as support; this rejects curved contours (e.g. point-target rings)
    whose pixels merely pass near the line.
    """
    mask = np.asarray(mask, dtype=bool)
    if direction is not None:
        pixel_theta = np.rad2deg(np.asarray(direction, dtype=float))
        aligned = np.abs(wrap_degrees(pixel_theta - theta_deg)) <= direction_tol_deg
        mask = mask & aligned
    x, y = _mask_coordinates(mask)
    if x.size == 0:
        return []
    rad = math.radians(theta_deg)
    c, s = math.cos(rad), math.sin(rad)
    perp = x * c + y * s - rho
    near = np.abs(perp) <= 1.0
    if not np.any(near):
        return []
    t = np.unique(np.rint(-x[near] * s + y[near] * c).astype(int))
    runs = []
    start = prev = int(t[0])
    for value in t[1:]:
        value = int(value)
        if value - prev - 1 <= gap_tolerance:
            prev = value
        else:
            runs.append((start, prev))
            start = prev = value
    runs.append((start, prev))
    return [(a, b) for a, b in runs if b - a + 1 >= min_length]


def line_point(rho: float, theta_deg: float, t: float):
    """Centre-origin (x, y) of the point at parameter t along the line."""
    rad = math.radians(theta_deg)
    c, s = math.cos(rad), math.sin(rad)
    return rho * c - t * s, rho * s + t * c


def segment_endpoints(rho: float, theta_deg: float, t_start: float, t_end: float, shape):
    """Segment endpoints in array pixel coordinates (col, row)."""
    h, w = shape
    x0, y0 = line_point(rho, theta_deg, t_start)
    x1, y1 = line_point(rho, theta_deg, t_end)
    return (x0 + w // 2, y0 + h // 2, x1 + w // 2, y1 + h // 2)
