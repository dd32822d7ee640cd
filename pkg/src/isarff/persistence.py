"""Cumulative images and per-cluster kinematics.

Combining an aligned sequence per pixel suppresses frame-varying
artefacts; per-cluster PCA in (rho, theta, frame) space measures how a
feature moves through the aligned sequence.  Static structure stays
put (principal direction along the frame axis); a shadow edge drifts,
tilting the direction away from the frame axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cluster import FeatureCluster
from .errors import InsufficientDataError
from .isar_sim import IntensityFrame

LABEL_STATIC = "static_feature"
LABEL_SHADOW = "shadow_edge"
LABEL_INDETERMINATE = "indeterminate"

DEFAULT_MIN_FRAMES = 10
DEFAULT_PV_MIN = 0.95
DEFAULT_PHI_MIN_DEG = 10.0
DEFAULT_PERSIST_MIN_FRAMES = 3


@dataclass
class ClusterKinematics:
    principal_direction: np.ndarray  # unit vector in scaled (rho, theta, frame) space
    variance_fraction: float         # leading eigenvalue over the covariance trace
    divergence_angle: float          # degrees from the frame axis, in [0, 90]
    frame_count: int


@dataclass
class FeatureLabel:
    cluster_id: int
    label: str


def cumulative_image(frames: list[IntensityFrame], method: str = "mean") -> IntensityFrame:
    """Per-pixel mean or median across the sequence."""
    if method not in ("mean", "median"):
        raise ValueError("method must be 'mean' or 'median'")
    if not frames:
        raise ValueError("need at least one frame")
    shape = frames[0].shape
    for f in frames[1:]:
        if f.shape != shape:
            raise ValueError("cumulative image requires equal frame shapes")
    # per-pixel sort makes both reductions bit-exactly invariant to frame order
    stack = np.sort(np.stack([f.pixels for f in frames]), axis=0)
    pixels = stack.mean(axis=0) if method == "mean" else np.median(stack, axis=0)
    floors = [f.floor_db for f in frames if f.floor_db is not None]
    return IntensityFrame(
        pixels=pixels,
        range_spacing=frames[0].range_spacing,
        crossrange_spacing=frames[0].crossrange_spacing,
        frame_index=0,
        floor_db=min(floors) if floors else None,
    )


def cluster_pca(cluster: FeatureCluster, frame_scale: float) -> ClusterKinematics:
    """Principal direction and variance fraction of a cluster's evolution.

    Member points live in (rho_scaled, theta_scaled, frame * frame_scale);
    the divergence angle is measured between the principal direction and
    the frame axis, using the absolute frame component so the eigenvector
    sign ambiguity cancels.
    """
    members = cluster.members
    frames = {m.frame_index for m in members}
    if len(members) < 3 or len(frames) < 2:
        raise InsufficientDataError(
            "cluster kinematics needs >= 3 members spanning >= 2 frames"
        )
    pts = np.array(
        [[m.rho_scaled, m.theta_scaled, m.frame_index * frame_scale] for m in members]
    )
    centred = pts - pts.mean(axis=0)
    cov = centred.T @ centred / (len(members) - 1)
    eigenvalues, eigenvectors = np.linalg.eigh(cov)
    direction = eigenvectors[:, -1]
    # deterministic sign: frame component non-negative
    if direction[2] < 0 or (direction[2] == 0 and direction[(direction != 0).argmax()] < 0):
        direction = -direction
    pv = float(eigenvalues[-1] / eigenvalues.sum())
    phi = math.degrees(math.acos(min(1.0, abs(float(direction[2])))))
    return ClusterKinematics(
        principal_direction=direction,
        variance_fraction=pv,
        divergence_angle=phi,
        frame_count=len(frames),
    )


def classify_shadow(
    kinematics: ClusterKinematics,
    min_frames: int = DEFAULT_MIN_FRAMES,
    pv_min: float = DEFAULT_PV_MIN,
    phi_min: float = DEFAULT_PHI_MIN_DEG,
) -> str:
    """Label a cluster as static structure, moving shadow edge, or neither.

    A confident call needs enough frame appearances and an essentially
    one-dimensional cluster (variance fraction close to 1); the
    divergence angle then separates drifting shadow edges from static
    features.
    """
    if kinematics.frame_count < min_frames:
        return LABEL_INDETERMINATE
    if kinematics.variance_fraction < pv_min:
        return LABEL_INDETERMINATE
    if kinematics.divergence_angle >= phi_min:
        return LABEL_SHADOW
    return LABEL_STATIC


def persistence_filter(
    clusters: list[FeatureCluster],
    min_frames: int = DEFAULT_PERSIST_MIN_FRAMES,
) -> list[FeatureCluster]:
    """Drop clusters seen in fewer than min_frames distinct frames.

    Gaps are allowed: only the count of distinct frames matters, not
    contiguity.
    """
    return [c for c in clusters if not c.noise and c.frame_count() >= min_frames]
