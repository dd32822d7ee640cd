"""Binary frame formats and CSV reports.

All binary files are little-endian: a 6-byte magic, u32 rows and cols,
the row-major pixel grid, and (except for the label map) a trailer of
float32 range/cross-range spacings plus the u32 frame index.  Complex
pixels are (re, im) float32 pairs.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .cluster import FeatureCluster, ParamPoint
from .hough import LineFeature, segment_endpoints
from .isar_sim import ComplexFrame, IntensityFrame

MAGIC_COMPLEX = b"ISARC1"
MAGIC_INTENSITY = b"ISARI1"
MAGIC_GRAD_MAG = b"GRADM1"
MAGIC_GRAD_DIR = b"GRADD1"
MAGIC_MASK = b"MASKB1"
MAGIC_FEATURE_MAP = b"FMAP01"

_HEADER = struct.Struct("<II")
_TRAILER = struct.Struct("<ffI")


def _fmt(value: float) -> str:
    return format(float(value), ".9g")


def _write_gridfile(path, magic: bytes, grid_bytes: bytes, shape, trailer=None):
    with open(path, "wb") as f:
        f.write(magic)
        f.write(_HEADER.pack(shape[0], shape[1]))
        f.write(grid_bytes)
        if trailer is not None:
            f.write(_TRAILER.pack(*trailer))


def _read_gridfile(path, magic: bytes, dtype, with_trailer: bool):
    raw = Path(path).read_bytes()
    if raw[:6] != magic:
        raise ValueError(f"{path}: expected magic {magic!r}, found {raw[:6]!r}")
    rows, cols = _HEADER.unpack_from(raw, 6)
    dtype = np.dtype(dtype)
    start = 6 + _HEADER.size
    end = start + rows * cols * dtype.itemsize
    grid = np.frombuffer(raw[start:end], dtype=dtype).reshape(rows, cols)
    trailer = _TRAILER.unpack_from(raw, end) if with_trailer else None
    return grid, trailer


def write_complex_frame(path, frame: ComplexFrame):
    grid = np.ascontiguousarray(frame.pixels.astype("<c8"))
    _write_gridfile(
        path,
        MAGIC_COMPLEX,
        grid.tobytes(),
        frame.pixels.shape,
        (frame.range_spacing, frame.crossrange_spacing, frame.frame_index),
    )


def read_complex_frame(path) -> ComplexFrame:
    grid, trailer = _read_gridfile(path, MAGIC_COMPLEX, "<c8", with_trailer=True)
    return ComplexFrame(
        pixels=grid.astype(complex),
        range_spacing=trailer[0],
        crossrange_spacing=trailer[1],
        frame_index=trailer[2],
    )


def write_intensity_frame(path, frame: IntensityFrame, magic: bytes = MAGIC_INTENSITY):
    grid = np.ascontiguousarray(frame.pixels.astype("<f4"))
    _write_gridfile(
        path,
        magic,
        grid.tobytes(),
        frame.pixels.shape,
        (frame.range_spacing, frame.crossrange_spacing, frame.frame_index),
    )


def read_intensity_frame(path, magic: bytes = MAGIC_INTENSITY) -> IntensityFrame:
    grid, trailer = _read_gridfile(path, magic, "<f4", with_trailer=True)
    return IntensityFrame(
        pixels=grid.astype(float),
        range_spacing=trailer[0],
        crossrange_spacing=trailer[1],
        frame_index=trailer[2],
    )


def write_mask(path, mask: np.ndarray, spacings=(1.0, 1.0), frame_index: int = 0):
    grid = np.ascontiguousarray(mask.astype(np.uint8))
    _write_gridfile(
        path, MAGIC_MASK, grid.tobytes(), mask.shape, (spacings[0], spacings[1], frame_index)
    )


def read_mask(path) -> np.ndarray:
    grid, _ = _read_gridfile(path, MAGIC_MASK, np.uint8, with_trailer=True)
    return grid.astype(bool)


def write_feature_map(path, grid: np.ndarray):
    data = np.ascontiguousarray(grid.astype("<u2"))
    _write_gridfile(path, MAGIC_FEATURE_MAP, data.tobytes(), grid.shape, trailer=None)


def read_feature_map(path) -> np.ndarray:
    grid, _ = _read_gridfile(path, MAGIC_FEATURE_MAP, "<u2", with_trailer=False)
    return grid.astype(np.uint16)


def write_alignment_report(path, params, statuses):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["frame", "theta_deg", "cx", "cy", "dx", "dy", "sx_px", "sy_px", "status"])
        for i, (p, status) in enumerate(zip(params, statuses)):
            writer.writerow(
                [
                    i,
                    _fmt(np.degrees(p.rotation)),
                    _fmt(p.scale[0]),
                    _fmt(p.scale[1]),
                    _fmt(p.shear[0]),
                    _fmt(p.shear[1]),
                    _fmt(p.translation[0]),
                    _fmt(p.translation[1]),
                    status,
                ]
            )


def write_feature_report(path, features: list[LineFeature], frame_shape):
    """One row per supporting segment of each detected line."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(
            [
                "frame",
                "rho_px",
                "theta_deg",
                "strength",
                "seg_start_x",
                "seg_start_y",
                "seg_end_x",
                "seg_end_y",
            ]
        )
        for feat in features:
            for t0, t1 in feat.segments:
                x0, y0, x1, y1 = segment_endpoints(feat.rho, feat.theta, t0, t1, frame_shape)
                writer.writerow(
                    [
                        feat.frame_index,
                        _fmt(feat.rho),
                        _fmt(feat.theta),
                        _fmt(feat.strength),
                        _fmt(x0),
                        _fmt(y0),
                        _fmt(x1),
                        _fmt(y1),
                    ]
                )


def read_feature_report(path, frame_shape) -> list[LineFeature]:
    """Rebuild line features, regrouping segment rows by detection."""
    h, w = frame_shape
    features: list[LineFeature] = []
    key = None
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        for row in reader:
            this_key = (row["frame"], row["rho_px"], row["theta_deg"], row["strength"])
            rho = float(row["rho_px"])
            theta = float(row["theta_deg"])
            rad = np.deg2rad(theta)
            c, s = np.cos(rad), np.sin(rad)
            x0 = float(row["seg_start_x"]) - w // 2
            y0 = float(row["seg_start_y"]) - h // 2
            x1 = float(row["seg_end_x"]) - w // 2
            y1 = float(row["seg_end_y"]) - h // 2
            segment = (float(-x0 * s + y0 * c), float(-x1 * s + y1 * c))
            if this_key != key:
                features.append(
                    LineFeature(
                        rho=rho,
                        theta=theta,
                        strength=float(row["strength"]),
                        segments=[],
                        frame_index=int(row["frame"]),
                    )
                )
                key = this_key
            features[-1].segments.append(segment)
    return features


def write_cluster_report(path, clusters: list[FeatureCluster], noise: list[ParamPoint], features):
    """Member rows per cluster plus the unclustered noise points.

    Member rows carry the theta the point was clustered with, which for a
    seam duplicate lies in the extended range beyond +/-180; this keeps a
    cluster straddling the seam numerically contiguous for downstream
    kinematics.
    """
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["cluster_id", "frame", "rho_px", "theta_deg", "strength", "is_noise"])
        for cluster in sorted(clusters, key=lambda c: c.id):
            for p in cluster.members:
                feat = features[p.feature_ref]
                writer.writerow(
                    [
                        cluster.id,
                        p.frame_index,
                        _fmt(feat.rho),
                        _fmt(p.theta_scaled * 360.0),
                        _fmt(feat.strength),
                        0,
                    ]
                )
        for p in noise:
            feat = features[p.feature_ref]
            writer.writerow([0, p.frame_index, _fmt(feat.rho), _fmt(feat.theta), _fmt(feat.strength), 1])


def read_cluster_report(path):
    """Return {cluster_id: [(frame, rho, theta)]} for clustered members."""
    clusters: dict[int, list[tuple[int, float, float]]] = {}
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        for row in reader:
            if row["is_noise"] == "1":
                continue
            cid = int(row["cluster_id"])
            clusters.setdefault(cid, []).append(
                (int(row["frame"]), float(row["rho_px"]), float(row["theta_deg"]))
            )
    return clusters


def write_kinematics_report(path, rows):
    """rows: (cluster_id, frames, pv, phi_deg, label) tuples."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["cluster_id", "frames", "pv", "phi_deg", "label"])
        for cid, frames, pv, phi, label in rows:
            writer.writerow([cid, frames, _fmt(pv), _fmt(phi), label])
