"""isarff: ISAR frame-sequence simulation and persistent feature analysis."""

from .align import AffineParams, AlignedSequence, align_sequence, apply_affine, compose_affine
from .cluster import FeatureCluster, ParamPoint, dbscan, k_distance_epsilon, scale_params
from .config import PipelineConfig, load_pipeline_config
from .edges import GradientField, compute_gradient_field, roewa_gradients
from .hough import HoughAccumulator, LineFeature, detect_peaks, standard_hough, weighted_hough
from .isar_sim import (
    ComplexFrame,
    IntensityFrame,
    PhaseHistory,
    backscatter_field,
    cross_range_resolution,
    form_image,
    range_resolution,
    to_intensity,
)
from .persistence import ClusterKinematics, classify_shadow, cluster_pca, cumulative_image
from .pipeline import RunManifest, run_pipeline
from .scene import EncounterConfig, ScattererModel, builtin_model, frame_apertures

__version__ = "0.1.0"

__all__ = [
    "AffineParams",
    "AlignedSequence",
    "ClusterKinematics",
    "ComplexFrame",
    "EncounterConfig",
    "FeatureCluster",
    "GradientField",
    "HoughAccumulator",
    "IntensityFrame",
    "LineFeature",
    "ParamPoint",
    "PhaseHistory",
    "PipelineConfig",
    "RunManifest",
    "ScattererModel",
    "align_sequence",
    "apply_affine",
    "backscatter_field",
    "builtin_model",
    "classify_shadow",
    "cluster_pca",
    "compose_affine",
    "compute_gradient_field",
    "cross_range_resolution",
    "cumulative_image",
    "dbscan",
    "detect_peaks",
    "form_image",
    "frame_apertures",
    "k_distance_epsilon",
    "load_pipeline_config",
    "range_resolution",
    "roewa_gradients",
    "run_pipeline",
    "scale_params",
    "standard_hough",
    "to_intensity",
    "weighted_hough",
]
