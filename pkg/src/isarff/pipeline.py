"""Stage orchestration: simulate, align, detect, cluster, analyze, render.

Every stage reads its inputs from and writes its artifacts to one output
directory using the documented file formats, so stages can be re-run
independently.  Re-running with identical configuration and inputs
produces bit-identical CSV and binary artifacts.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import cluster as clustering
from . import formats, persistence
from .align import STATUS_UNALIGNED, align_sequence
from .config import PipelineConfig
from .edges import compute_gradient_field
from .errors import IsarffError, StageError
from .hough import LineFeature, detect_peaks, localize_feature, rho_axis_for_shape, weighted_hough
from .isar_sim import IntensityFrame, backscatter_field, encounter_axes, form_image, to_intensity
from .render import render_overlay, save_image
from .scene import builtin_model, frame_apertures, load_scatterer_csv, project_scatterers

TOOL_VERSION = "0.1.0"

FRAMES_DIR = "frames"
ALIGNED_DIR = "aligned"
EDGES_DIR = "edges"


@dataclass
class RunManifest:
    config: dict
    tool_version: str = TOOL_VERSION
    input_hashes: dict = field(default_factory=dict)
    stage_timings: dict = field(default_factory=dict)
    frame_count: int = 0

    def to_json(self) -> str:
        payload = {
            "tool_version": self.tool_version,
            "config": self.config,
            "input_hashes": self.input_hashes,
            "stage_timings": self.stage_timings,
            "frame_count": self.frame_count,
        }
        return json.dumps(payload, sort_keys=True, indent=2, default=str)


def parallel_map(fn, items, threads: int = 1):
    """Order-preserving map; items are independent so results are
    identical for any worker count."""
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _load_model(cfg: PipelineConfig):
    if cfg.model.startswith("builtin:"):
        return builtin_model(cfg.model.split(":", 1)[1])
    return load_scatterer_csv(cfg.model)


def stage_simulate(cfg: PipelineConfig, out_dir: Path, threads: int = 1) -> int:
    """Simulate the encounter; writes complex and intensity frames."""
    model = _load_model(cfg)
    apertures = frame_apertures(cfg.encounter)
    frames_dir = out_dir / FRAMES_DIR
    frames_dir.mkdir(parents=True, exist_ok=True)

    def one(aperture):
        scatterers = project_scatterers(model, aperture, cfg.visibility_exponent)
        frequencies, angles = encounter_axes(cfg.encounter, aperture)
        history = backscatter_field(scatterers, frequencies, angles)
        frame = form_image(history, cfg.window, cfg.zero_pad_factor, aperture.index)
        return frame, to_intensity(frame, cfg.dynamic_range_db)

    results = parallel_map(one, apertures, threads)
    for aperture, (frame, intensity) in zip(apertures, results):
        formats.write_complex_frame(frames_dir / f"frame_{aperture.index:03d}.cpx", frame)
        formats.write_intensity_frame(frames_dir / f"frame_{aperture.index:03d}.int", intensity)
    return len(apertures)


def _read_intensity_dir(directory: Path):
    paths = sorted(directory.glob("frame_*.int"))
    if not paths:
        raise FileNotFoundError(f"no intensity frames found in {directory}")
    return [formats.read_intensity_frame(p) for p in paths]


def _read_statuses(out_dir: Path):
    import csv

    path = out_dir / "alignment.csv"
    statuses = {}
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            statuses[int(row["frame"])] = row["status"]
    return statuses


def _aligned_frames_for_analysis(out_dir: Path):
    """Aligned frames minus the ones flagged unaligned."""
    frames = _read_intensity_dir(out_dir / ALIGNED_DIR)
    statuses = _read_statuses(out_dir)
    return [f for i, f in enumerate(frames) if statuses.get(i) != STATUS_UNALIGNED]


def stage_align(cfg: PipelineConfig, out_dir: Path, threads: int = 1) -> int:
    frames = _read_intensity_dir(out_dir / FRAMES_DIR)
    sequence = align_sequence(frames, min_area=cfg.min_area)
    aligned_dir = out_dir / ALIGNED_DIR
    aligned_dir.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(sequence.frames):
        formats.write_intensity_frame(aligned_dir / f"frame_{i:03d}.int", frame)
    formats.write_alignment_report(out_dir / "alignment.csv", sequence.params, sequence.statuses)
    return len(sequence.frames)


def _frame_like(frame: IntensityFrame, pixels) -> IntensityFrame:
    return IntensityFrame(
        pixels=pixels,
        range_spacing=frame.range_spacing,
        crossrange_spacing=frame.crossrange_spacing,
        frame_index=frame.frame_index,
        floor_db=None,
    )


def stage_edges(cfg: PipelineConfig, out_dir: Path, threads: int = 1) -> int:
    """Debug dumps of gradient magnitude, direction and significance mask."""
    frames = _read_intensity_dir(out_dir / ALIGNED_DIR)
    edges_dir = out_dir / EDGES_DIR
    edges_dir.mkdir(parents=True, exist_ok=True)
    fields = parallel_map(
        lambda f: compute_gradient_field(f, cfg.roewa_b, cfg.min_area), frames, threads
    )
    for i, (frame, gf) in enumerate(zip(frames, fields)):
        spacings = (frame.range_spacing, frame.crossrange_spacing)
        mag = _frame_like(frame, gf.magnitude)
        direction = _frame_like(frame, gf.direction)
        formats.write_intensity_frame(edges_dir / f"frame_{i:03d}_gmag.bin", mag, formats.MAGIC_GRAD_MAG)
        formats.write_intensity_frame(edges_dir / f"frame_{i:03d}_gdir.bin", direction, formats.MAGIC_GRAD_DIR)
        formats.write_mask(edges_dir / f"frame_{i:03d}_mask.bin", gf.mask, spacings, i)
    return len(frames)


def detect_features(frame, cfg: PipelineConfig) -> list[LineFeature]:
    """Gradient field -> weighted transform -> peaks -> segment support."""
    gf = compute_gradient_field(frame, cfg.roewa_b, cfg.min_area)
    if not gf.mask.any():
        return []
    acc = weighted_hough(gf.mask, gf.magnitude, gf.direction, cfg.sigma_dir_deg)
    peaks = detect_peaks(acc, cfg.min_fraction, (cfg.nhood_rho, cfg.nhood_theta))
    features = []
    for rho, theta, strength in peaks:
        segments = localize_feature(
            gf.mask,
            rho,
            theta,
            cfg.gap_tolerance_px,
            cfg.min_length_px,
            direction=gf.direction,
            direction_tol_deg=3.0 * cfg.sigma_dir_deg,
        )
        if segments:
            features.append(
                LineFeature(
                    rho=rho,
                    theta=theta,
                    strength=strength,
                    segments=segments,
                    frame_index=frame.frame_index,
                )
            )
    return features


def stage_detect(cfg: PipelineConfig, out_dir: Path, threads: int = 1) -> int:
    frames = _read_intensity_dir(out_dir / ALIGNED_DIR)
    statuses = _read_statuses(out_dir)
    usable = [f for i, f in enumerate(frames) if statuses.get(i) != STATUS_UNALIGNED]
    per_frame = parallel_map(lambda f: detect_features(f, cfg), usable, threads)
    features = [feat for sub in per_frame for feat in sub]
    formats.write_feature_report(out_dir / "features.csv", features, frames[0].shape)
    return len(features)


def _cluster_inputs(cfg: PipelineConfig, out_dir: Path):
    frames = _read_intensity_dir(out_dir / ALIGNED_DIR)
    shape = frames[0].shape
    features = formats.read_feature_report(out_dir / "features.csv", shape)
    rho_extent = float(rho_axis_for_shape(shape)[-1])
    return frames, shape, features, rho_extent


def run_clustering(features, rho_extent, cfg: PipelineConfig):
    """Scale, extend past the theta seam, pick epsilon, cluster, resolve."""
    points = clustering.scale_params(features, rho_extent)
    extended = clustering.extend_theta(points)
    mu = cfg.mu_override if cfg.mu_override is not None else clustering.DEFAULT_MU
    k = max(1, mu - 1)
    if cfg.epsilon_override is not None:
        eps = cfg.epsilon_override
    elif len(extended) > k:
        eps = clustering.k_distance_epsilon(extended, k)
        if eps <= 0.0:
            eps = clustering.EPSILON_MIN
    else:
        eps = clustering.EPSILON_MIN
    clusters = clustering.dbscan(extended, eps, mu)
    clusters = clustering.resolve_duplicates(clusters, mu)
    return points, clusters, eps, mu


def stage_cluster(cfg: PipelineConfig, out_dir: Path, threads: int = 1) -> int:
    frames, shape, features, rho_extent = _cluster_inputs(cfg, out_dir)
    points, clusters, _, _ = run_clustering(features, rho_extent, cfg)
    retained = persistence.persistence_filter(clusters, cfg.persist_min_frames)
    member_refs = {p.feature_ref for c in retained for p in c.members}
    noise = [p for p in points if p.feature_ref not in member_refs]
    formats.write_cluster_report(out_dir / "clusters.csv", retained, noise, features)
    grid = clustering.reconstruct_feature_map(retained, features, shape)
    formats.write_feature_map(out_dir / "feature_map.bin", grid)
    return len(retained)


def stage_analyze(cfg: PipelineConfig, out_dir: Path, threads: int = 1) -> int:
    frames = _aligned_frames_for_analysis(out_dir)
    shape = frames[0].shape
    rho_extent = float(rho_axis_for_shape(shape)[-1])
    total_frames = len(_read_intensity_dir(out_dir / ALIGNED_DIR))
    frame_scale = 1.0 / (total_frames - 1) if total_frames > 1 else 1.0
    members = formats.read_cluster_report(out_dir / "clusters.csv")
    rows = []
    for cid in sorted(members):
        pts = [
            clustering.ParamPoint(rho / rho_extent, theta / 360.0, frame, ref)
            for ref, (frame, rho, theta) in enumerate(members[cid])
        ]
        fc = clustering.FeatureCluster(id=cid, members=pts)
        try:
            kin = persistence.cluster_pca(fc, frame_scale)
            label = persistence.classify_shadow(kin, cfg.min_frames, cfg.pv_min, cfg.phi_min_deg)
            rows.append((cid, kin.frame_count, kin.variance_fraction, kin.divergence_angle, label))
        except IsarffError:
            rows.append((cid, fc.frame_count(), 0.0, 0.0, persistence.LABEL_INDETERMINATE))
    formats.write_kinematics_report(out_dir / "kinematics.csv", rows)
    for method in ("mean", "median"):
        image = persistence.cumulative_image(frames, method)
        formats.write_intensity_frame(out_dir / f"cumulative_{method}.int", image)
    return len(rows)


def stage_render(cfg: PipelineConfig, out_dir: Path, base: str = "mean", output: str = "overlay.png") -> int:
    frame = formats.read_intensity_frame(out_dir / f"cumulative_{base}.int")
    grid = formats.read_feature_map(out_dir / "feature_map.bin")
    save_image(out_dir / output, render_overlay(frame, grid))
    return 1


STAGES = {
    "simulate": stage_simulate,
    "align": stage_align,
    "edges": stage_edges,
    "detect": stage_detect,
    "cluster": stage_cluster,
    "analyze": stage_analyze,
}

PIPELINE_ORDER = ("simulate", "align", "detect", "cluster", "analyze")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_pipeline(
    cfg: PipelineConfig,
    out_dir,
    threads: int = 1,
    config_path=None,
) -> RunManifest:
    """Run all stages end to end and write the run manifest.

    On a stage failure every artifact created by this run is removed and
    a StageError naming the stage propagates.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    before = {p for p in out_dir.rglob("*") if p.is_file()}
    manifest = RunManifest(config=cfg.resolved())
    if config_path is not None:
        manifest.input_hashes["config"] = _sha256(Path(config_path))
    if not cfg.model.startswith("builtin:"):
        manifest.input_hashes["model"] = _sha256(Path(cfg.model))

    order = list(PIPELINE_ORDER)
    if cfg.dump_gradients:
        order.insert(order.index("detect"), "edges")
    name = order[0]
    try:
        for name in order:
            start = time.perf_counter()
            count = STAGES[name](cfg, out_dir, threads)
            manifest.stage_timings[name] = time.perf_counter() - start
            if name == "simulate":
                manifest.frame_count = count
    except StageError:
        _remove_new_files(out_dir, before)
        raise
    except Exception as exc:
        _remove_new_files(out_dir, before)
        raise StageError(name, str(exc)) from exc
    (out_dir / "manifest.json").write_text(manifest.to_json())
    return manifest


def _remove_new_files(out_dir: Path, before: set):
    for p in sorted(out_dir.rglob("*"), reverse=True):
        if p.is_file() and p not in before:
            p.unlink()
        elif p.is_dir() and not any(p.iterdir()):
            p.rmdir()
