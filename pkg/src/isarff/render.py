"""Rendering of intensity frames with cluster overlays."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .isar_sim import IntensityFrame

# distinct, deterministic colours indexed by (cluster id - 1) mod len
PALETTE = (
    (230, 25, 75),
    (60, 180, 75),
    (255, 225, 25),
    (0, 130, 200),
    (245, 130, 48),
    (145, 30, 180),
    (70, 240, 240),
    (240, 50, 230),
    (210, 245, 60),
    (250, 190, 212),
    (0, 128, 128),
    (220, 190, 255),
)


def render_overlay(frame: IntensityFrame, feature_map: np.ndarray) -> np.ndarray:
    """RGB uint8 image: grayscale dB base with colour-indexed clusters."""
    if feature_map.shape != frame.shape:
        raise ValueError("frame and feature map shapes must match")
    floor = frame.fill_value()
    span = max(1e-12, 0.0 - floor)
    gray = np.clip((frame.pixels - floor) / span, 0.0, 1.0)
    gray8 = np.round(gray * 255.0).astype(np.uint8)
    rgb = np.repeat(gray8[:, :, None], 3, axis=2)
    for cid in np.unique(feature_map):
        if cid == 0:
            continue
        rgb[feature_map == cid] = PALETTE[(int(cid) - 1) % len(PALETTE)]
    return rgb


def save_image(path, rgb: np.ndarray):
    """Write PNG via Pillow, or grayscale PGM (P5) for .pgm paths."""
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        gray = np.round(rgb.astype(float).mean(axis=2)).astype(np.uint8)
        with open(path, "wb") as f:
            f.write(b"P5\n%d %d\n255\n" % (gray.shape[1], gray.shape[0]))
            f.write(gray.tobytes())
        return
    from PIL import Image

    Image.fromarray(rgb, mode="RGB").save(path, format="PNG")
