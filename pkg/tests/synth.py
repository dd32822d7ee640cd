"""Synthetic scenes shared by the unit and acceptance tests."""

import numpy as np

from isarff.isar_sim import IntensityFrame


def wrap_deg(angle):
    w = (angle + 180.0) % 360.0 - 180.0
    return 180.0 if w == -180.0 else w


def db_frame(amplitude, frame_index=0, floor_db=-50.0, spacing=0.03):
    """IntensityFrame from a positive linear-amplitude image."""
    amplitude = np.asarray(amplitude, dtype=float)
    peak = amplitude.max()
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(amplitude / peak)
    db = np.clip(db, floor_db, 0.0)
    return IntensityFrame(db, spacing, spacing, frame_index, floor_db=floor_db)


def strips_frame(rng, size, n_strips, contrast=6.0, looks=2, d_max=12.0):
    """Bright strips on a unit background under multiplicative speckle.

    Returns (amplitude image, oriented edge lines).  Each strip has a
    rising edge at (d - w/2, theta) and a falling edge at
    (-(d + w/2), theta + 180); strips are kept separated in (rho, theta)
    so every true line is resolvable.
    """
    amp = np.ones((size, size))
    offsets = np.arange(size) - size // 2
    gx, gy = np.meshgrid(offsets, offsets)
    lines, used = [], []
    for _ in range(n_strips):
        theta = d = width = None
        for _attempt in range(200):
            theta = float(rng.choice(np.arange(0, 180, 15)))
            d = float(rng.uniform(-d_max, d_max))
            width = int(rng.integers(8, 12))
            clear = True
            for theta0, d0, w0 in used:
                dt = abs(wrap_deg(theta - theta0))
                if min(dt, abs(180.0 - dt)) < 25.0 and abs(d - d0) < (width + w0) / 2 + 6:
                    clear = False
                    break
            if clear:
                break
        used.append((theta, d, width))
        rad = np.deg2rad(theta)
        proj = gx * np.cos(rad) + gy * np.sin(rad)
        amp[(proj >= d - width / 2) & (proj <= d + width / 2)] = contrast
        lines.append((d - width / 2, wrap_deg(theta)))
        lines.append((-(d + width / 2), wrap_deg(theta + 180.0)))
    # multi-look amplitude speckle: mean of `looks` unit-mean intensities
    intensity = rng.exponential(1.0, size=(looks,) + amp.shape).mean(axis=0)
    return amp * np.sqrt(intensity), lines


def band_frame(frame_index, drift_px, size=64):
    """One static horizontal band plus one vertical band drifting in x.

    The static band's edges sit at theta = +/-90; the drifting band's
    edges at theta = 0 and 180 move by drift_px per frame in rho.
    """
    amp = np.ones((size, size))
    amp[10:18, :] = 6.0
    c0 = int(round(10 + drift_px * frame_index))
    amp[:, c0 : c0 + 8] = 6.0
    return db_frame(amp, frame_index)
