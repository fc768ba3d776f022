"""
Fan-target (sector star) contrast measurement.

The target has ``spokes`` bright/dark line pairs around its center, so a
circle of radius r crosses ``spokes`` periods and the local frequency is
``spokes / (2 pi r)`` cycles per pixel.  Contrast on a circle is
``(Imax - Imin) / (Imax + Imin)``, taken per period with Imax from the
bright half and Imin from the dark half, then averaged over periods.

Angles are measured counter-clockwise from the +column axis with rows
pointing down; the sector starting at angle 0 is bright.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import RadiusOutOfBounds


@dataclass(frozen=True)
class MTFCurve:
    radii: np.ndarray
    frequencies: np.ndarray  # cycles (line pairs) per pixel
    contrasts: np.ndarray
    target_center: tuple

    @property
    def samples(self):
        return list(zip(self.frequencies.tolist(), self.contrasts.tolist()))

    def rows(self):
        return [[r, f, c] for r, f, c in zip(self.radii, self.frequencies, self.contrasts)]

    FIELDS = ("radius", "frequency", "contrast")


def polar_angle(rows, cols, center):
    cy, cx = center
    return np.mod(np.arctan2(cy - rows, cols - cx), 2 * np.pi)


def render_fan_target(side, spokes=16, high=255.0, low=0.0):
    """Binary sector star: a pixel is bright iff ``floor(spokes * theta / pi)`` is even."""
    if side < 32:
        raise ValueError("fan target side must be >= 32")
    if spokes < 2:
        raise ValueError("need at least 2 spokes")
    c = (side - 1) / 2.0
    rr, cc = np.mgrid[0:side, 0:side].astype(np.float64)
    theta = polar_angle(rr, cc, (c, c))
    bright = np.floor(spokes * theta / np.pi).astype(np.int64) % 2 == 0
    return np.where(bright, high, low)


def image_center(img):
    h, w = np.shape(img)
    return ((h - 1) / 2.0, (w - 1) / 2.0)


def circle_contrast(img, center, radius, spokes, max_arc_step=0.5):
    """Mean per-period contrast along one circle (bilinear sampling)."""
    # whole number of samples per half period, arc step <= max_arc_step
    per_half = max(2, int(np.ceil(np.pi * radius / (spokes * max_arc_step))))
    n = 2 * spokes * per_half
    theta = (np.arange(n) + 0.5) * (2 * np.pi / n)
    cy, cx = center
    rows = cy - radius * np.sin(theta)
    cols = cx + radius * np.cos(theta)
    vals = ndimage.map_coordinates(np.asarray(img, dtype=np.float64), [rows, cols],
                                   order=1, mode="nearest")
    vals = vals.reshape(spokes, 2, per_half)
    imax = vals[:, 0, :].max(axis=1)
    imin = vals[:, 1, :].min(axis=1)
    den = imax + imin
    c = np.where(den > 0, (imax - imin) / np.where(den > 0, den, 1.0), 0.0)
    return float(np.clip(c, 0.0, 1.0).mean())


def mtf_fan(image, center=None, radii=None, spokes=16):
    """Contrast versus frequency on a fan target image.

    Radii default to 10 values spanning 0.1 to 0.45 of the image side.
    """
    img = np.asarray(image, dtype=np.float64)
    if spokes < 2:
        raise ValueError("need at least 2 spokes")
    if center is None:
        center = image_center(img)
    if radii is None:
        radii = np.linspace(0.1, 0.45, 10) * min(img.shape)
    radii = np.asarray(sorted(float(r) for r in radii))
    cy, cx = center
    h, w = img.shape
    limit = min(cy, cx, h - 1 - cy, w - 1 - cx)
    if radii[0] <= 0 or radii[-1] > limit:
        raise RadiusOutOfBounds(f"radii must lie in (0, {limit:g}]")
    contrasts = np.array([circle_contrast(img, center, r, spokes) for r in radii])
    freqs = spokes / (2 * np.pi * radii)
    return MTFCurve(radii, freqs, contrasts, (float(cy), float(cx)))


def radius_for_frequency(freq, spokes):
    return spokes / (2 * np.pi * freq)
