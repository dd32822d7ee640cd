"""Pipeline configuration: flat key=value files with strict validation."""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError
from .scene import (
    BUILTIN_MODEL_KINDS,
    ENCOUNTER_KEYS,
    EncounterConfig,
    encounter_from_mapping,
    parse_key_values,
)

# (default, parser, validator description) per key; encounter keys are
# handled separately so their defaults live beside the module ones.
ENCOUNTER_DEFAULTS = {
    "centre_frequency_hz": "300e9",
    "bandwidth_hz": "5e9",
    "frequency_samples": "64",
    "angle_samples_per_frame": "64",
    "total_aspect_span_deg": "19.0",
    "integration_angle_deg": "0.95",
    "grazing_start_deg": "-15.0",
    "grazing_end_deg": "15.0",
}


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


@dataclass
class PipelineConfig:
    encounter: EncounterConfig
    model: str = "builtin:box_with_panels"
    window: str = "hanning"
    zero_pad_factor: int = 4
    dynamic_range_db: float = 50.0
    roewa_b: float = 0.73
    min_area: int = 12
    sigma_dir_deg: float = 10.0
    min_fraction: float = 0.3
    nhood_rho: int = 5
    nhood_theta: int = 5
    gap_tolerance_px: int = 3
    min_length_px: int = 12
    mu_override: int | None = None
    epsilon_override: float | None = None
    pv_min: float = 0.95
    phi_min_deg: float = 10.0
    min_frames: int = 10
    persist_min_frames: int = 3
    visibility_exponent: float = 1.0
    enable_shear: bool = False  # reserved; the aligner estimates no shear yet
    dump_gradients: bool = False

    def __post_init__(self):
        if self.window not in ("none", "hanning"):
            raise ConfigError("window must be 'none' or 'hanning'")
        if self.zero_pad_factor < 1:
            raise ConfigError("zero_pad_factor must be >= 1")
        if self.dynamic_range_db <= 0:
            raise ConfigError("dynamic_range_db must be positive")
        if not 0.0 < self.roewa_b < 1.0:
            raise ConfigError("roewa_b must be in (0, 1)")
        if self.min_area < 1:
            raise ConfigError("min_area must be >= 1")
        if self.sigma_dir_deg <= 0:
            raise ConfigError("sigma_dir_deg must be positive")
        if not 0.0 < self.min_fraction <= 1.0:
            raise ConfigError("min_fraction must be in (0, 1]")
        if self.nhood_rho < 0 or self.nhood_theta < 0:
            raise ConfigError("peak neighbourhood sizes must be >= 0")
        if self.gap_tolerance_px < 0 or self.min_length_px < 1:
            raise ConfigError("gap_tolerance_px must be >= 0 and min_length_px >= 1")
        if self.mu_override is not None and self.mu_override < 1:
            raise ConfigError("mu_override must be >= 1")
        if self.epsilon_override is not None and self.epsilon_override < 0:
            raise ConfigError("epsilon_override must be >= 0")
        if not 0.0 <= self.pv_min <= 1.0:
            raise ConfigError("pv_min must be in [0, 1]")
        if not 0.0 <= self.phi_min_deg <= 90.0:
            raise ConfigError("phi_min_deg must be in [0, 90]")
        if self.min_frames < 1 or self.persist_min_frames < 1:
            raise ConfigError("frame-count thresholds must be >= 1")
        if self.visibility_exponent < 0:
            raise ConfigError("visibility_exponent must be >= 0")
        if self.model.startswith("builtin:"):
            kind = self.model.split(":", 1)[1]
            if kind not in BUILTIN_MODEL_KINDS:
                raise ConfigError(f"unknown builtin model: {kind!r}")

    def resolved(self) -> dict:
        """Every tunable that influences the run, defaults included."""
        out = {}
        for f in fields(EncounterConfig):
            out[f.name] = getattr(self.encounter, f.name)
        for f in fields(PipelineConfig):
            if f.name == "encounter":
                continue
            out[f.name] = getattr(self, f.name)
        out["mu"] = self.mu_override if self.mu_override is not None else 4
        return out


_PARSERS = {
    "model": str,
    "window": str,
    "zero_pad_factor": int,
    "dynamic_range_db": float,
    "roewa_b": float,
    "min_area": int,
    "sigma_dir_deg": float,
    "min_fraction": float,
    "nhood_rho": int,
    "nhood_theta": int,
    "gap_tolerance_px": int,
    "min_length_px": int,
    "mu_override": int,
    "epsilon_override": float,
    "pv_min": float,
    "phi_min_deg": float,
    "min_frames": int,
    "persist_min_frames": int,
    "visibility_exponent": float,
    "enable_shear": _bool,
    "dump_gradients": _bool,
}

KNOWN_KEYS = set(ENCOUNTER_KEYS) | set(_PARSERS)


def config_from_mapping(values: dict[str, str]) -> PipelineConfig:
    unknown = sorted(set(values) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config key: {unknown[0]}")
    enc_values = dict(ENCOUNTER_DEFAULTS)
    enc_values.update({k: v for k, v in values.items() if k in ENCOUNTER_KEYS})
    encounter = encounter_from_mapping(enc_values)
    kwargs = {}
    for key, parse in _PARSERS.items():
        if key in values:
            try:
                kwargs[key] = parse(values[key])
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from exc
    return PipelineConfig(encounter=encounter, **kwargs)


def load_pipeline_config(path) -> PipelineConfig:
    return config_from_mapping(parse_key_values(Path(path).read_text()))
