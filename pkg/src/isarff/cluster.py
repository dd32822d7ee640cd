"""Cross-frame association of line features by density clustering.

Features are points in a scaled (rho, theta) parameter space; DBSCAN
groups detections of the same physical line across frames and leaves
one-off false detections as noise.  The frame index is carried along for
kinematics but is not a clustering dimension.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InsufficientDataError
from .hough import LineFeature, line_point

DEFAULT_MU = 4  # twice the parameter-space dimensionality
EPSILON_MIN = 1e-6
THETA_DUPLICATE_DEG = 160.0


@dataclass(frozen=True)
class ParamPoint:
    rho_scaled: float
    theta_scaled: float
    frame_index: int
    feature_ref: int
    is_duplicate: bool = False


@dataclass
class FeatureCluster:
    id: int
    members: list[ParamPoint] = field(default_factory=list)
    noise: bool = False

    def frame_count(self) -> int:
        return len({m.frame_index for m in self.members})


def scale_params(features: list[LineFeature], rho_extent: float) -> list[ParamPoint]:
    """Normalize (rho, theta) to comparable unit ranges.

    rho is divided by the image reach (max |rho|), theta by 360 degrees,
    so both axes weigh similarly in the clustering metric.
    """
    if rho_extent <= 0:
        raise ValueError("rho_extent must be positive")
    return [
        ParamPoint(
            rho_scaled=f.rho / rho_extent,
            theta_scaled=f.theta / 360.0,
            frame_index=f.frame_index,
            feature_ref=ref,
        )
        for ref, f in enumerate(features)
    ]


def extend_theta(points: list[ParamPoint]) -> list[ParamPoint]:
    """Duplicate points near the +/-180 degree seam at theta -/+ 360.

    Keeps clusters straddling the seam together; duplicates are marked so
    each physical feature is counted once after clustering.
    """
    out = list(points)
    threshold = THETA_DUPLICATE_DEG / 360.0
    for p in points:
        if abs(p.theta_scaled) > threshold:
            shift = -1.0 if p.theta_scaled > 0 else 1.0
            out.append(replace(p, theta_scaled=p.theta_scaled + shift, is_duplicate=True))
    return out


def _coords(points: list[ParamPoint]) -> np.ndarray:
    return np.array([[p.rho_scaled, p.theta_scaled] for p in points], dtype=float).reshape(-1, 2)


def k_distance_epsilon(points: list[ParamPoint], k: int) -> float:
    """Neighbourhood radius from the elbow of the k-distance curve.

    Each point's distance to its k-th nearest neighbour is sorted in
    descending order; the elbow is the point of maximum perpendicular
    distance to the chord joining the curve endpoints (axes normalized to
    [0, 1] so the geometry is scale free).  The returned value is taken
    on the high side of the drop, so cluster-interior spacings stay
    within the radius even when the curve falls in a sharp cliff.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(points) < k + 1:
        raise InsufficientDataError(f"k-distance needs at least {k + 1} points")
    xy = _coords(points)
    d = np.sqrt(((xy[:, None, :] - xy[None, :, :]) ** 2).sum(axis=2))
    kth = np.sort(d, axis=1)[:, k]
    curve = np.sort(kth)[::-1]
    n = curve.size
    if n < 3 or curve[0] == curve[-1]:
        return float(curve[0])
    ts = np.arange(n) / (n - 1)
    vals = (curve - curve[-1]) / (curve[0] - curve[-1])
    chord = np.array([ts[-1] - ts[0], vals[-1] - vals[0]])
    chord /= np.linalg.norm(chord)
    rel = np.stack([ts - ts[0], vals - vals[0]], axis=1)
    perp = np.abs(rel[:, 0] * chord[1] - rel[:, 1] * chord[0])
    elbow = int(np.argmax(perp))
    above = np.nonzero(curve[:elbow] > curve[elbow])[0]
    if above.size:
        elbow = int(above[-1])
    return float(curve[elbow])


def canonical_order(points: list[ParamPoint]) -> list[ParamPoint]:
    return sorted(
        points,
        key=lambda p: (p.rho_scaled, p.theta_scaled, p.frame_index, p.feature_ref, p.is_duplicate),
    )


def dbscan_labels(xy: np.ndarray, eps: float, mu: int) -> np.ndarray:
    """Classic density clustering over pre-ordered rows.

    Neighbourhoods use dist <= eps and include the point itself when
    counting towards mu.  Returns labels: -1 noise, 1..K cluster ids in
    discovery order; border points belong to the first cluster that
    claims them.
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")
    if mu < 1:
        raise ValueError("mu must be >= 1")
    n = xy.shape[0]
    labels = np.zeros(n, dtype=int)  # 0 = unclassified
    if n == 0:
        return labels
    d2 = ((xy[:, None, :] - xy[None, :, :]) ** 2).sum(axis=2)
    neigh = d2 <= eps * eps
    core = neigh.sum(axis=1) >= mu
    cluster_id = 0
    for p in range(n):
        if labels[p] != 0:
            continue
        if not core[p]:
            labels[p] = -1
            continue
        cluster_id += 1
        labels[p] = cluster_id
        queue = deque(np.nonzero(neigh[p])[0].tolist())
        while queue:
            q = queue.popleft()
            if labels[q] == -1:
                labels[q] = cluster_id  # noise becomes a border point
            if labels[q] != 0:
                continue
            labels[q] = cluster_id
            if core[q]:
                queue.extend(np.nonzero(neigh[q])[0].tolist())
    return labels


def dbscan(points: list[ParamPoint], eps: float, mu: int) -> list[FeatureCluster]:
    """Cluster parameter points; noise points belong to no cluster.

    Input is canonicalized (sorted by scaled coordinates) first, so the
    partition is invariant to input permutation.
    """
    ordered = canonical_order(points)
    labels = dbscan_labels(_coords(ordered), eps, mu)
    clusters: dict[int, FeatureCluster] = {}
    for point, label in zip(ordered, labels):
        if label <= 0:
            continue
        clusters.setdefault(int(label), FeatureCluster(id=int(label))).members.append(point)
    return [clusters[i] for i in sorted(clusters)]


def noise_points(points: list[ParamPoint], clusters: list[FeatureCluster]) -> list[ParamPoint]:
    clustered = {(p.feature_ref, p.is_duplicate) for c in clusters for p in c.members}
    return [p for p in canonical_order(points) if (p.feature_ref, p.is_duplicate) not in clustered]


def resolve_duplicates(clusters: list[FeatureCluster], mu: int) -> list[FeatureCluster]:
    """Keep each physical feature in exactly one cluster.

    Where a feature's original and seam duplicate were both clustered,
    the copy in the larger cluster wins (ties to the lower cluster id);
    clusters left with fewer than mu members dissolve to noise.
    """
    location: dict[int, list[tuple[int, ParamPoint]]] = {}
    for c in clusters:
        for p in c.members:
            location.setdefault(p.feature_ref, []).append((c.id, p))
    by_id = {c.id: c for c in clusters}
    sizes = {c.id: len(c.members) for c in clusters}
    for ref, entries in location.items():
        if len(entries) < 2:
            continue
        entries = sorted(entries, key=lambda e: (-sizes[e[0]], e[0]))
        for cid, point in entries[1:]:
            by_id[cid].members.remove(point)
    return [c for c in clusters if len(c.members) >= mu]


def circular_median_degrees(angles: list[float]) -> float:
    """Member angle minimizing total wrapped distance; ties to the lowest."""
    best = None
    for candidate in sorted(angles):
        cost = sum(abs(_wrap180(candidate - a)) for a in angles)
        if best is None or cost < best[0] - 1e-12:
            best = (cost, candidate)
    return best[1]


def _wrap180(angle: float) -> float:
    wrapped = math.fmod(angle + 180.0, 360.0)
    if wrapped <= 0:
        wrapped += 360.0
    return wrapped - 180.0


def reconstruct_feature_map(
    clusters: list[FeatureCluster],
    features: list[LineFeature],
    frame_shape: tuple[int, int],
) -> np.ndarray:
    """Label grid of per-cluster representative lines (0 = background).

    Each cluster draws the median-rho, circular-median-theta line over
    the union of its members' segment intervals projected onto that
    representative line.  Where clusters overlap, the lowest id wins.
    """
    h, w = frame_shape
    grid = np.zeros((h, w), dtype=np.uint16)
    for cluster in sorted(clusters, key=lambda c: c.id):
        member_feats = [features[p.feature_ref] for p in cluster.members]
        if not member_feats:
            continue
        rho = float(np.median([f.rho for f in member_feats]))
        theta = circular_median_degrees([f.theta for f in member_feats])
        rad = math.radians(theta)
        c, s = math.cos(rad), math.sin(rad)
        intervals = []
        for feat in member_feats:
            for t0, t1 in feat.segments:
                xa, ya = line_point(feat.rho, feat.theta, t0)
                xb, yb = line_point(feat.rho, feat.theta, t1)
                ta = -xa * s + ya * c
                tb = -xb * s + yb * c
                intervals.append((min(ta, tb), max(ta, tb)))
        for t0, t1 in _merge_intervals(intervals):
            for t in range(int(math.ceil(t0)), int(math.floor(t1)) + 1):
                x, y = line_point(rho, theta, float(t))
                col = int(round(x)) + w // 2
                row = int(round(y)) + h // 2
                if 0 <= row < h and 0 <= col < w and grid[row, col] == 0:
                    grid[row, col] = cluster.id
    return grid


def _merge_intervals(intervals):
    merged = []
    for t0, t1 in sorted(intervals):
        if merged and t0 <= merged[-1][1] + 1.0:
            merged[-1][1] = max(merged[-1][1], t1)
        else:
            merged.append([t0, t1])
    return [(a, b) for a, b in merged]
