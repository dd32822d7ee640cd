"""Scatterer models of satellite-like targets and encounter framing.

A target is a cloud of point scatterers given in its body frame.  An
encounter sweeps the aspect angle while the grazing angle drifts slowly;
the sweep is subdivided into frame apertures that all share one
integration angle, so every frame in the sequence has the same
cross-range resolution.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError

ENCOUNTER_KEYS = (
    "centre_frequency_hz",
    "bandwidth_hz",
    "frequency_samples",
    "angle_samples_per_frame",
    "total_aspect_span_deg",
    "integration_angle_deg",
    "grazing_start_deg",
    "grazing_end_deg",
)

BUILTIN_MODEL_KINDS = ("box_with_panels", "panel_with_hinges", "single_point", "two_points")

# Desk-scale geometry for the builtin targets (metres).  The whole target
# must stay inside half the unambiguous image extent of the default
# 64-sample configuration (0.96 m at 3 cm resolution).
_BODY_HALF = (0.12, 0.10, 0.08)
_BODY_STEP = 0.04
_PANEL_X = (0.14, 0.44)          # panel wings extend along +/- body x
_PANEL_HALF_Y = 0.12
_PANEL_STEP = 0.03
_HINGE_X = (0.24, 0.34)          # segment boundaries carrying hinge rows
_HINGE_Z = 0.015                 # hinge rows protrude alternately in +/- z
_HINGE_STEP = 0.02

BODY_AMPLITUDE = 1.0
PANEL_AMPLITUDE = 2.0
HINGE_AMPLITUDE = 3.0


@dataclass(frozen=True)
class Scatterer:
    """Point scatterer: body-frame position (m), reflectivity amplitude and
    an optional facet normal used by the visibility rule (None = isotropic)."""

    position: np.ndarray
    amplitude: float
    normal: np.ndarray | None = None

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float)
        if pos.shape != (3,) or not np.all(np.isfinite(pos)):
            raise ValueError("scatterer position must be a finite 3-vector")
        if not (self.amplitude >= 0.0):
            raise ValueError("scatterer amplitude must be >= 0")
        object.__setattr__(self, "position", pos)
        if self.normal is not None:
            n = np.asarray(self.normal, dtype=float)
            if n.shape != (3,) or not np.all(np.isfinite(n)) or np.linalg.norm(n) == 0.0:
                raise ValueError("facet normal must be a finite nonzero 3-vector")
            object.__setattr__(self, "normal", n / np.linalg.norm(n))


@dataclass
class ScattererModel:
    name: str
    scatterers: list[Scatterer] = field(default_factory=list)

    def require_nonempty(self):
        if not self.scatterers:
            raise ValueError(f"scatterer model '{self.name}' is empty")


@dataclass(frozen=True)
class EncounterConfig:
    """Radar and encounter geometry parameters for one simulated sequence."""

    centre_frequency_hz: float
    bandwidth_hz: float
    frequency_samples: int
    angle_samples_per_frame: int
    total_aspect_span_deg: float
    integration_angle_deg: float
    grazing_start_deg: float
    grazing_end_deg: float

    def __post_init__(self):
        if self.centre_frequency_hz <= 0 or self.bandwidth_hz <= 0:
            raise ConfigError("centre frequency and bandwidth must be positive")
        if not self.bandwidth_hz < 2.0 * self.centre_frequency_hz:
            raise ConfigError("bandwidth must be smaller than twice the centre frequency")
        if self.integration_angle_deg <= 0:
            raise ConfigError("integration angle must be positive")
        if self.total_aspect_span_deg < self.integration_angle_deg:
            raise ConfigError("total aspect span must cover at least one integration angle")
        if self.frequency_samples < 2 or self.angle_samples_per_frame < 2:
            raise ConfigError("need at least 2 frequency and 2 angle samples")


@dataclass(frozen=True)
class FrameAperture:
    index: int
    aspect_start: float
    aspect_stop: float
    grazing: float

    @property
    def aspect_centre(self) -> float:
        return 0.5 * (self.aspect_start + self.aspect_stop)


def builtin_model(kind: str) -> ScattererModel:
    """Return one of the built-in deterministic scatterer sets.

    ``box_with_panels`` is a dense isotropic body block with two panel
    wings along the body x axis; hinge rows sit on the panel segment
    boundaries and protrude alternately above and below the panel plane,
    so only the rows facing the radar reflect at a given grazing angle.
    """
    if kind == "single_point":
        return ScattererModel("single_point", [Scatterer((0.0, 0.0, 0.0), 1.0)])
    if kind == "two_points":
        return ScattererModel(
            "two_points",
            [Scatterer((0.5, 0.0, 0.0), 1.0), Scatterer((-0.5, 0.0, 0.0), 1.0)],
        )
    if kind == "panel_with_hinges":
        scatterers = _panel_wing(+1.0) + _hinge_rows(+1.0)
        return ScattererModel("panel_with_hinges", scatterers)
    if kind == "box_with_panels":
        scatterers = _body_block()
        for side in (+1.0, -1.0):
            scatterers += _panel_wing(side)
            scatterers += _hinge_rows(side)
        return ScattererModel("box_with_panels", scatterers)
    raise ConfigError(f"unknown builtin model kind: {kind!r}")


def _body_block() -> list[Scatterer]:
    hx, hy, hz = _BODY_HALF
    xs = np.arange(-hx, hx + 1e-9, _BODY_STEP)
    ys = np.arange(-hy, hy + 1e-9, _BODY_STEP)
    zs = np.arange(-hz, hz + 1e-9, _BODY_STEP)
    out = []
    for x in xs:
        for y in ys:
            for z in zs:
                out.append(Scatterer((x, y, z), BODY_AMPLITUDE))
    return out


def _panel_wing(side: float) -> list[Scatterer]:
    xs = side * np.arange(_PANEL_X[0], _PANEL_X[1] + 1e-9, _PANEL_STEP)
    ys = np.arange(-_PANEL_HALF_Y, _PANEL_HALF_Y + 1e-9, _PANEL_STEP)
    out = []
    for x in xs:
        for y in ys:
            # two-sided panel surface: one facet per face
            out.append(Scatterer((x, y, 0.0), PANEL_AMPLITUDE, normal=(0.0, 0.0, 1.0)))
            out.append(Scatterer((x, y, 0.0), PANEL_AMPLITUDE, normal=(0.0, 0.0, -1.0)))
    return out


def _hinge_rows(side: float) -> list[Scatterer]:
    ys = np.arange(-_PANEL_HALF_Y, _PANEL_HALF_Y + 1e-9, _HINGE_STEP)
    out = []
    for i, bx in enumerate(_HINGE_X):
        sign = 1.0 if i % 2 == 0 else -1.0
        z = sign * _HINGE_Z
        for y in ys:
            out.append(
                Scatterer((side * bx, y, z), HINGE_AMPLITUDE, normal=(0.0, 0.0, sign))
            )
    return out


def frame_apertures(config: EncounterConfig) -> list[FrameAperture]:
    """Subdivide the encounter into contiguous equal-angle frame apertures.

    The sweep starts at aspect 0; any residual aspect beyond the last full
    integration angle is discarded so all frames share one resolution.
    Grazing angle is interpolated linearly from the first to the last frame.
    """
    omega = config.integration_angle_deg
    n = int(math.floor(config.total_aspect_span_deg / omega + 1e-9))
    gs, ge = config.grazing_start_deg, config.grazing_end_deg
    apertures = []
    for i in range(n):
        frac = i / (n - 1) if n > 1 else 0.0
        apertures.append(
            FrameAperture(
                index=i,
                aspect_start=i * omega,
                aspect_stop=i * omega + omega,
                grazing=gs + (ge - gs) * frac,
            )
        )
    return apertures


def slant_plane_basis(aspect_deg: float, grazing_deg: float) -> np.ndarray:
    """Orthonormal basis of the imaging geometry as a 3x3 rotation matrix.

    Row 0 is the radar line of sight (range axis), row 1 the cross-range
    axis induced by the aspect sweep about body z, row 2 their cross
    product.  Applying the matrix to body coordinates preserves distances.
    """
    a = math.radians(aspect_deg)
    g = math.radians(grazing_deg)
    u = np.array([math.cos(g) * math.cos(a), math.cos(g) * math.sin(a), math.sin(g)])
    v = np.array([-math.sin(a), math.cos(a), 0.0])
    w = np.cross(u, v)
    return np.vstack([u, v, w])


def project_scatterers(
    model: ScattererModel,
    aperture: FrameAperture,
    visibility_exponent: float = 1.0,
) -> np.ndarray:
    """Project a model into the slant plane of an aperture centre.

    Returns an (n, 3) array of (range x, cross-range y, amplitude).
    Scatterers carrying a facet normal are attenuated by
    max(0, cos angle(normal, line of sight)) ** visibility_exponent, so
    facets turned away from the radar stop reflecting.
    """
    model.require_nonempty()
    basis = slant_plane_basis(aperture.aspect_centre, aperture.grazing)
    los = basis[0]
    out = np.empty((len(model.scatterers), 3))
    for i, sc in enumerate(model.scatterers):
        rotated = basis @ sc.position
        amp = sc.amplitude
        if sc.normal is not None:
            amp *= max(0.0, float(np.dot(sc.normal, los))) ** visibility_exponent
        out[i] = (rotated[0], rotated[1], amp)
    return out


def save_scatterer_csv(path, model: ScattererModel):
    """Write a model as CSV with header x_m,y_m,z_m,amplitude,nx,ny,nz."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["x_m", "y_m", "z_m", "amplitude", "nx", "ny", "nz"])
        for sc in model.scatterers:
            row = [f"{v:.9g}" for v in sc.position] + [f"{sc.amplitude:.9g}"]
            if sc.normal is None:
                row += ["", "", ""]
            else:
                row += [f"{v:.9g}" for v in sc.normal]
            writer.writerow(row)


def load_scatterer_csv(path) -> ScattererModel:
    """Load a scatterer model from CSV (blank normal columns = isotropic)."""
    expected = ["x_m", "y_m", "z_m", "amplitude", "nx", "ny", "nz"]
    scatterers = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != expected:
            raise ConfigError(f"scatterer CSV must have header {','.join(expected)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 7:
                raise ConfigError(f"scatterer CSV row has {len(row)} columns, expected 7")
            try:
                pos = tuple(float(v) for v in row[:3])
                amp = float(row[3])
                normal_cells = [c.strip() for c in row[4:]]
                if any(normal_cells):
                    if not all(normal_cells):
                        raise ConfigError("normal must have all of nx,ny,nz or none")
                    normal = tuple(float(v) for v in normal_cells)
                else:
                    normal = None
                scatterers.append(Scatterer(pos, amp, normal))
            except ValueError as exc:
                raise ConfigError(f"scatterer CSV line {lineno}: {exc}") from exc
    return ScattererModel(Path(path).stem, scatterers)


def parse_key_values(text: str) -> dict[str, str]:
    """Parse flat ``key = value`` lines; '#' starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if key in out:
            raise ConfigError(f"duplicate config key: {key}")
        out[key] = value.strip()
    return out


def encounter_from_mapping(values: dict[str, str]) -> EncounterConfig:
    missing = [k for k in ENCOUNTER_KEYS if k not in values]
    if missing:
        raise ConfigError(f"missing encounter keys: {', '.join(missing)}")
    try:
        return EncounterConfig(
            centre_frequency_hz=float(values["centre_frequency_hz"]),
            bandwidth_hz=float(values["bandwidth_hz"]),
            frequency_samples=int(values["frequency_samples"]),
            angle_samples_per_frame=int(values["angle_samples_per_frame"]),
            total_aspect_span_deg=float(values["total_aspect_span_deg"]),
            integration_angle_deg=float(values["integration_angle_deg"]),
            grazing_start_deg=float(values["grazing_start_deg"]),
            grazing_end_deg=float(values["grazing_end_deg"]),
        )
    except ValueError as exc:
        raise ConfigError(f"bad encounter value: {exc}") from exc


def load_encounter_config(path) -> EncounterConfig:
    """Read an encounter config from a flat key=value text file."""
    values = parse_key_values(Path(path).read_text())
    unknown = sorted(set(values) - set(ENCOUNTER_KEYS))
    if unknown:
        raise ConfigError(f"unknown config key: {unknown[0]}")
    return encounter_from_mapping(values)
