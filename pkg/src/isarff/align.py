"""Frame-to-frame alignment with per-frame affine transforms.

Each frame is coarsely segmented, its attitude axis estimated from the
mask's second moments, and an affine transform (rotation to the
reference axis, bounding-box scale, centroid translation) is applied so
persistent target features occupy fixed pixel locations.  The reference
frame is the one with the largest segmented area and keeps identity
parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .edges import otsu_threshold, remove_small_components
from .errors import AmbiguousAxisError, DegenerateTransformError, SegmentationError
from .isar_sim import IntensityFrame

_CLOSING_STRUCTURE = np.ones((3, 3), dtype=bool)
_AXIS_ISOTROPY_TOL = 1e-3

STATUS_OK = "ok"
STATUS_REFERENCE = "reference"
STATUS_UNALIGNED = "unaligned"


@dataclass
class AffineParams:
    """Scale, shear, rotation and translation of one frame transform.

    The transform matrix composes as scale * shear * rotation; shear is
    carried for completeness but the aligner keeps it at zero.
    """

    scale: tuple[float, float] = (1.0, 1.0)
    shear: tuple[float, float] = (0.0, 0.0)
    rotation: float = 0.0
    translation: tuple[float, float] = (0.0, 0.0)


@dataclass
class AlignedSequence:
    frames: list[IntensityFrame]
    params: list[AffineParams]
    reference_index: int
    statuses: list[str] = field(default_factory=list)


def compose_affine(p: AffineParams):
    """2x3 transform as (matrix A, translation S), A = scale*shear*rotation."""
    cx, cy = p.scale
    dx, dy = p.shear
    c, s = math.cos(p.rotation), math.sin(p.rotation)
    scale = np.array([[cx, 0.0], [0.0, cy]])
    shear = np.array([[1.0, dx], [dy, 1.0]])
    rotation = np.array([[c, -s], [s, c]])
    a = scale @ shear @ rotation
    if abs(np.linalg.det(a)) < 1e-12:
        raise DegenerateTransformError("affine parameters compose to a singular matrix")
    return a, np.asarray(p.translation, dtype=float)


def _invert(a: np.ndarray) -> np.ndarray:
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    if abs(det) < 1e-12:
        raise DegenerateTransformError("transform matrix is singular")
    return np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]]) / det


def apply_affine(frame: IntensityFrame, p: AffineParams, interp: str = "bilinear") -> IntensityFrame:
    """Warp a frame by inverse mapping; content moves to A*x + S.

    Coordinates are measured from the image centre pixel (x = column,
    y = row, downwards).  Pixels mapping outside the source are set to
    the frame's dB floor.
    """
    if interp not in ("nearest", "bilinear"):
        raise ValueError("interp must be 'nearest' or 'bilinear'")
    a, s = compose_affine(p)
    inv = _invert(a)
    h, w = frame.shape
    fill = frame.fill_value()
    xs = np.arange(w) - w // 2
    ys = np.arange(h) - h // 2
    gx, gy = np.meshgrid(xs, ys)
    src_x = inv[0, 0] * (gx - s[0]) + inv[0, 1] * (gy - s[1]) + w // 2
    src_y = inv[1, 0] * (gx - s[0]) + inv[1, 1] * (gy - s[1]) + h // 2
    pixels = frame.pixels
    if interp == "nearest":
        ix = np.rint(src_x).astype(int)
        iy = np.rint(src_y).astype(int)
        inside = (ix >= 0) & (ix <= w - 1) & (iy >= 0) & (iy <= h - 1)
        out = np.full((h, w), fill)
        out[inside] = pixels[iy[inside], ix[inside]]
    else:
        inside = (src_x >= 0) & (src_x <= w - 1) & (src_y >= 0) & (src_y <= h - 1)
        x0 = np.clip(np.floor(src_x).astype(int), 0, w - 1)
        y0 = np.clip(np.floor(src_y).astype(int), 0, h - 1)
        x1 = np.minimum(x0 + 1, w - 1)
        y1 = np.minimum(y0 + 1, h - 1)
        u = src_x - x0
        v = src_y - y0
        value = (
            (1 - u) * (1 - v) * pixels[y0, x0]
            + u * (1 - v) * pixels[y0, x1]
            + (1 - u) * v * pixels[y1, x0]
            + u * v * pixels[y1, x1]
        )
        out = np.where(inside, value, fill)
    return IntensityFrame(
        pixels=out,
        range_spacing=frame.range_spacing,
        crossrange_spacing=frame.crossrange_spacing,
        frame_index=frame.frame_index,
        floor_db=frame.floor_db,
    )


def segment_target(frame: IntensityFrame, min_area: int = 12) -> np.ndarray:
    """Coarse target mask: Otsu on dB, morphological closing, area filter."""
    values = frame.pixels
    if values.max() <= values.min():
        raise SegmentationError("frame is uniform; nothing to segment")
    threshold = otsu_threshold(values)
    mask = values >= threshold
    mask = ndimage.binary_closing(mask, structure=_CLOSING_STRUCTURE)
    mask = remove_small_components(mask, min_area)
    if not mask.any():
        raise SegmentationError("no component survived the minimum-area filter")
    return mask


def estimate_attitude_axis(mask: np.ndarray) -> float:
    """Principal-axis orientation of the mask in radians, within (-pi/2, pi/2].

    Uses second central moments of the pixel coordinates; raises when the
    moments are isotropic and no axis is defined.
    """
    mask = np.asarray(mask, dtype=bool)
    rows, cols = np.nonzero(mask)
    if rows.size == 0:
        raise ValueError("mask is empty")
    x = cols - cols.mean()
    y = rows - rows.mean()
    mxx = np.mean(x * x)
    myy = np.mean(y * y)
    mxy = np.mean(x * y)
    spread = math.hypot(mxx - myy, 2.0 * mxy)
    if spread <= _AXIS_ISOTROPY_TOL * (mxx + myy + 1e-30):
        raise AmbiguousAxisError("mask second moments are isotropic")
    return 0.5 * math.atan2(2.0 * mxy, mxx - myy)


def _axis_extents(mask: np.ndarray, axis_rad: float):
    """Bounding-box spans of the mask along and across a direction."""
    rows, cols = np.nonzero(mask)
    c, s = math.cos(axis_rad), math.sin(axis_rad)
    along = cols * c + rows * s
    across = -cols * s + rows * c
    return along.max() - along.min() + 1.0, across.max() - across.min() + 1.0


def _centroid(mask: np.ndarray, shape):
    rows, cols = np.nonzero(mask)
    h, w = shape
    return np.array([cols.mean() - w // 2, rows.mean() - h // 2])


def _wrap_half_pi(angle: float) -> float:
    """Smallest rotation mapping one undirected axis onto another."""
    return (angle + math.pi / 2.0) % math.pi - math.pi / 2.0


def align_sequence(
    frames: list[IntensityFrame],
    min_area: int = 12,
    interp: str = "bilinear",
) -> AlignedSequence:
    """Align a sequence onto the frame with the largest segmented area.

    Per frame: segment, estimate the attitude axis, rotate it onto the
    reference axis, scale by the bounding-box ratios along/across the
    axis, and translate the centroids into coincidence.  Frames that fail
    segmentation are flagged "unaligned" and left untouched; frames with
    an ambiguous axis are aligned without rotation.  Fails outright only
    when no frame can be segmented.
    """
    if len(frames) < 2:
        raise ValueError("alignment needs at least 2 frames")
    masks: list[np.ndarray | None] = []
    for frame in frames:
        try:
            masks.append(segment_target(frame, min_area))
        except SegmentationError:
            masks.append(None)
    areas = [int(m.sum()) if m is not None else -1 for m in masks]
    reference = int(np.argmax(areas))
    if masks[reference] is None:
        raise SegmentationError("no frame in the sequence could be segmented")

    ref_mask = masks[reference]
    shape = frames[reference].shape
    try:
        ref_axis = estimate_attitude_axis(ref_mask)
    except AmbiguousAxisError:
        ref_axis = None
    ref_centroid = _centroid(ref_mask, shape)
    ref_extents = _axis_extents(ref_mask, ref_axis if ref_axis is not None else 0.0)

    aligned: list[IntensityFrame] = []
    params: list[AffineParams] = []
    statuses: list[str] = []
    for i, frame in enumerate(frames):
        if i == reference:
            aligned.append(frame)
            params.append(AffineParams())
            statuses.append(STATUS_REFERENCE)
            continue
        mask = masks[i]
        if mask is None:
            aligned.append(frame)
            params.append(AffineParams())
            statuses.append(STATUS_UNALIGNED)
            continue
        rotation = 0.0
        if ref_axis is not None:
            try:
                rotation = _wrap_half_pi(ref_axis - estimate_attitude_axis(mask))
            except AmbiguousAxisError:
                rotation = 0.0
        extents = _axis_extents(mask, (ref_axis if ref_axis is not None else 0.0) - rotation)
        scale = (ref_extents[0] / extents[0], ref_extents[1] / extents[1])
        p = AffineParams(scale=scale, rotation=rotation)
        a, _ = compose_affine(p)
        translation = ref_centroid - a @ _centroid(mask, shape)
        p = AffineParams(scale=scale, rotation=rotation, translation=tuple(translation))
        aligned.append(apply_affine(frame, p, interp))
        params.append(p)
        statuses.append(STATUS_OK)
    return AlignedSequence(aligned, params, reference, statuses)
