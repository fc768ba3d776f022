"""
Discrete point spread functions for the blur between mask and sensor.

Every kernel is stored as an odd-sized, non-negative raster at scene
resolution that sums to one.  Disk kernels are rasterized by exact
area weighting: each pixel receives the area of its unit square that
falls inside the disk, so the diameter behaves as a continuous
parameter (a 1 2/3 sensor-pixel disk is a perfectly good kernel).
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import integrate

IN_FOCUS = "in_focus"
DISK = "disk"
CODED = "coded"
EXPLICIT = "explicit"
KINDS = (IN_FOCUS, DISK, CODED, EXPLICIT)

# default aperture code for the coded kernel: three of four quadrants open
DEFAULT_CODE = ((1, 1), (1, 0))


@dataclass(frozen=True, eq=False)
class BlurKernel:
    kind: str
    raster: np.ndarray
    diameter_sensor_px: float | None = None
    name: str = ""
    code: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        r = np.array(self.raster, dtype=np.float64)
        if r.ndim != 2 or r.shape[0] % 2 == 0 or r.shape[1] % 2 == 0:
            raise ValueError(f"kernel raster must be 2D with odd sides, got {r.shape}")
        if np.any(r < 0):
            raise ValueError("kernel raster must be non-negative")
        if abs(r.sum() - 1.0) > 1e-12:
            raise ValueError(f"kernel raster must sum to 1, sums to {r.sum()!r}")
        r.setflags(write=False)
        object.__setattr__(self, "raster", r)
        if not self.name:
            object.__setattr__(self, "name", self.kind)

    @property
    def normalization(self):
        return float(self.raster.sum())

    @property
    def half_size(self):
        return self.raster.shape[0] // 2, self.raster.shape[1] // 2

    def __repr__(self):
        return f"BlurKernel({self.name!r}, kind={self.kind!r}, shape={self.raster.shape})"


def _normalize(raster):
    raster = np.asarray(raster, dtype=np.float64)
    total = raster.sum()
    if total <= 0:
        raise ValueError("kernel raster has no positive mass")
    return raster / total


def in_focus():
    return BlurKernel(IN_FOCUS, np.ones((1, 1)), name="in_focus")


def explicit(raster, name="explicit"):
    """Wrap a user-supplied raster (renormalized to unit sum)."""
    raster = np.atleast_2d(np.asarray(raster, dtype=np.float64))
    return BlurKernel(EXPLICIT, _normalize(raster), name=name)


def _interval_overlap_len(lo, hi, s):
    return max(0.0, min(hi, s) - max(lo, -s))


def circle_rect_area(radius, x0, x1, y0, y1):
    """Area of the disk ``x^2 + y^2 <= radius^2`` inside ``[x0,x1] x [y0,y1]``."""
    a, b = max(x0, -radius), min(x1, radius)
    if a >= b or y0 >= y1:
        return 0.0

    def chord(x):
        s = math.sqrt(max(radius * radius - x * x, 0.0))
        return _interval_overlap_len(y0, y1, s)

    # the integrand has kinks where the chord half-height crosses y0 or y1
    pts = []
    for y in (y0, y1):
        if abs(y) < radius:
            xk = math.sqrt(radius * radius - y * y)
            pts.extend(p for p in (-xk, xk) if a < p < b)
    val, _ = integrate.quad(chord, a, b, points=sorted(pts) or None,
                            epsabs=1e-15, epsrel=1e-13, limit=200)
    return val


def disk_raster(diameter_px):
    """Area-weighted disk raster; ``diameter_px`` is in raster (scene) pixels.

    The raster is not normalized.  Its half-width is the smallest integer h
    with ``h + 1/2 >= radius``.
    """
    if diameter_px <= 0:
        raise ValueError("disk diameter must be positive")
    radius = diameter_px / 2.0
    h = max(0, math.ceil(radius - 0.5))
    out = np.zeros((2 * h + 1, 2 * h + 1))
    for i in range(-h, h + 1):
        for j in range(-h, h + 1):
            out[i + h, j + h] = circle_rect_area(radius, j - 0.5, j + 0.5, i - 0.5, i + 0.5)
    return out


def disk(diameter_sensor_px, sensor_block):
    """Defocus disk with diameter given in sensor pixels."""
    raster = disk_raster(diameter_sensor_px * sensor_block)
    name = f"disk_{diameter_sensor_px:.4g}"
    return BlurKernel(DISK, _normalize(raster), diameter_sensor_px=float(diameter_sensor_px),
                      name=name)


def coded(diameter_sensor_px, sensor_block, code=DEFAULT_CODE, name=None):
    """Disk aperture partially blocked by a binary code.

    The code is an ``n x n`` binary array laid over the bounding square of
    the disk (row 0 on top).  Each raster pixel keeps the area of the disk
    that is both inside the pixel and inside an open code cell.
    """
    code = np.asarray(code, dtype=np.int64)
    if code.ndim != 2 or code.shape[0] != code.shape[1]:
        raise ValueError("code must be a square 2D array")
    if not np.isin(code, (0, 1)).all() or code.sum() == 0:
        raise ValueError("code must be binary with at least one open cell")
    radius = diameter_sensor_px * sensor_block / 2.0
    h = max(0, math.ceil(radius - 0.5))
    n = code.shape[0]
    edges = [-radius + 2.0 * radius * t / n for t in range(n + 1)]
    out = np.zeros((2 * h + 1, 2 * h + 1))
    for i in range(-h, h + 1):
        for j in range(-h, h + 1):
            acc = 0.0
            for ci in range(n):
                for cj in range(n):
                    if not code[ci, cj]:
                        continue
                    y0, y1 = max(i - 0.5, edges[ci]), min(i + 0.5, edges[ci + 1])
                    x0, x1 = max(j - 0.5, edges[cj]), min(j + 0.5, edges[cj + 1])
                    if y0 < y1 and x0 < x1:
                        acc += circle_rect_area(radius, x0, x1, y0, y1)
            out[i + h, j + h] = acc
    if name is None:
        name = f"coded_{diameter_sensor_px:.4g}"
    return BlurKernel(CODED, _normalize(out), diameter_sensor_px=float(diameter_sensor_px),
                      name=name, code=tuple(map(tuple, code.tolist())))


LIBRARY_DISK_DIAMETERS = (1.0, 1.5, 5.0 / 3.0, 2.0, 3.0)


def kernel_library(geometry, extra=None):
    """Named kernels used by the simulations.

    Returns a dict: ``in_focus``, five disks (1, 1.5, 1 2/3, 2, 3 sensor
    pixels), and one coded kernel (2 sensor-pixel disk with a 2x2 aperture
    code).  ``extra`` maps names to user rasters, added as explicit kernels.
    """
    sb = geometry.sensor_block
    lib = {"in_focus": in_focus()}
    for d in LIBRARY_DISK_DIAMETERS:
        k = disk(d, sb)
        lib[k.name] = k
    lib["coded_2x2"] = coded(2.0, sb, DEFAULT_CODE, name="coded_2x2")
    for name, raster in (extra or {}).items():
        lib[name] = explicit(raster, name=name)
    return lib


def by_name(name, geometry):
    """Resolve a kernel spec string such as ``disk_1.667``, ``disk:2``, ``coded_2x2``."""
    lib = kernel_library(geometry)
    if name in lib:
        return lib[name]
    if name.startswith("disk"):
        d = float(name[4:].lstrip("_:"))
        return disk(d, geometry.sensor_block)
    if name.startswith("coded"):
        d = float(name[5:].lstrip("_:"))
        return coded(d, geometry.sensor_block)
    raise KeyError(f"unknown kernel {name!r}")
