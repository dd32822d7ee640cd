import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from isarff.isar_sim import backscatter_field, encounter_axes, form_image, to_intensity
from isarff.scene import EncounterConfig, builtin_model, frame_apertures, project_scatterers


def desk_encounter(n_frames=20, samples=64):
    return EncounterConfig(
        centre_frequency_hz=300e9,
        bandwidth_hz=5e9,
        frequency_samples=samples,
        angle_samples_per_frame=samples,
        total_aspect_span_deg=n_frames * 0.95,
        integration_angle_deg=0.95,
        grazing_start_deg=-15.0,
        grazing_end_deg=15.0,
    )


def simulate_sequence(config, model, window="hanning", pad=4, dynamic_range=50.0):
    frames = []
    for aperture in frame_apertures(config):
        frequencies, angles = encounter_axes(config, aperture)
        scatterers = project_scatterers(model, aperture)
        history = backscatter_field(scatterers, frequencies, angles)
        frame = form_image(history, window, pad, aperture.index)
        frames.append(to_intensity(frame, dynamic_range))
    return frames


@pytest.fixture(scope="session")
def box_sequence():
    """20 simulated frames of the box-with-panels target."""
    return simulate_sequence(desk_encounter(), builtin_model("box_with_panels"))
