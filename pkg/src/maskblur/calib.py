"""
Estimating the weighting matrices ``W_k = S B_k`` from point-probe responses.

A probe lights exactly one scene pixel; the sensor response to probe i
is column i of W.  Collecting all R responses for each kernel gives a
matrix that also captures distortion and misregistration, which a
shift-invariant blur model cannot describe.
"""

from dataclasses import dataclass
import json
from pathlib import Path

import numpy as np
from scipy import ndimage, sparse

from . import io as mbio
from .errors import DimensionMismatch, MissingResponse
from .model import Geometry, SystemOperator, blur, subsample, upscale_patterns
from .simkit import PatternSet

DEFAULT_THRESHOLD = 1e-4


def probe_schedule(g):
    """R single-pixel probes in row-major order, as scene-resolution masks."""
    R = g.n_scene
    bits = np.zeros((R, R), dtype=np.uint8)
    bits[np.arange(R), np.arange(R)] = 1
    return PatternSet(bits.reshape(R, g.scene_side, g.scene_side), 0, "probe")


@dataclass(frozen=True, eq=False)
class CalibratedWeights:
    """Measured ``W`` per kernel: ``matrices[j]`` is a CSC matrix of shape (M, R)."""

    geometry: Geometry
    matrices: tuple
    sparsity_threshold: float

    @property
    def kernel_count(self):
        return len(self.matrices)

    @property
    def degenerate(self):
        return all(m.nnz == 0 for m in self.matrices)

    def column(self, i, kernel=0):
        return self.matrices[kernel][:, i].toarray().ravel()

    def nonzero_columns(self, kernel=0):
        return int(np.count_nonzero(np.diff(self.matrices[kernel].indptr)))


def _as_stack(responses, g):
    arr = np.asarray(responses, dtype=np.float64)
    if arr.ndim == 4:  # (repeats, R, s, s)
        arr = arr.mean(axis=0)
    if arr.ndim != 3 or arr.shape[1:] != g.sensor_shape:
        raise DimensionMismatch(
            f"responses must be (R, {g.sensor_side}, {g.sensor_side}), got {arr.shape}")
    if arr.shape[0] != g.n_scene:
        raise MissingResponse(f"expected {g.n_scene} probe responses, got {arr.shape[0]}")
    return arr


def estimate_weights(responses, g, threshold=DEFAULT_THRESHOLD, background=None):
    """Build calibrated weights from probe responses.

    ``responses`` is one stack ``(R, s, s)`` or a list of stacks, one per
    kernel; a leading repeats axis ``(repeats, R, s, s)`` is averaged.
    ``background`` (sensor image) is subtracted when given.  Negative
    values are clipped to zero and, per column, entries below
    ``threshold * column max`` are dropped.  Columns keep their absolute
    scale.
    """
    if isinstance(responses, np.ndarray):
        stacks = [responses]
    else:
        stacks = list(responses)
        # a plain list of R sensor images is a single kernel
        if stacks and np.ndim(stacks[0]) == 2:
            stacks = [np.asarray(stacks)]
    mats = []
    for st in stacks:
        cols = _as_stack(st, g).reshape(g.n_scene, -1)
        if background is not None:
            cols = cols - np.asarray(background, dtype=np.float64).ravel()
        cols = np.clip(cols, 0.0, None)
        cmax = cols.max(axis=1, keepdims=True)
        keep = (cols >= threshold * cmax) & (cols > 0)
        cols = np.where(keep, cols, 0.0)
        mats.append(sparse.csc_matrix(cols.T))
    return CalibratedWeights(g, tuple(mats), float(threshold))


def forward_calibrated(w, patterns, x, kernel_index=None):
    """``y_k = W (d_k * x)`` using stored columns; shape (K, s, s)."""
    g = w.geometry
    bits = patterns.bits if isinstance(patterns, PatternSet) else np.asarray(patterns)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != g.scene_shape:
        raise DimensionMismatch(f"scene {x.shape} does not match {g.scene_shape}")
    d = upscale_patterns(bits, g).reshape(bits.shape[0], -1)
    K = d.shape[0]
    kidx = np.zeros(K, dtype=np.int64) if kernel_index is None else np.asarray(kernel_index)
    out = np.empty((K, g.n_sensor))
    for j in range(w.kernel_count):
        sel = np.flatnonzero(kidx == j)
        if sel.size:
            out[sel] = (w.matrices[j] @ (d[sel] * x.ravel()).T).T
    return out.reshape((K,) + g.sensor_shape)


def calibrated_operator(w, patterns, kernels=None):
    """SystemOperator that uses measured weights in place of ``S B_k``."""
    bits = patterns.bits if isinstance(patterns, PatternSet) else patterns
    return SystemOperator(w.geometry, bits, kernels, weighting=w)


# -- simulated probing ---------------------------------------------------------

@dataclass(frozen=True)
class Distortion:
    """Scene warp applied between mask and blur (mapping output -> source coords).

    A sample at output position p (relative to the image center) is read
    from ``center + (p / magnification) * (1 + barrel * |p|^2 / n^2) + shift``
    with bilinear interpolation, zero outside the image.
    """

    magnification: float = 1.0
    shift: tuple = (0.0, 0.0)
    barrel: float = 0.0

    def apply(self, img):
        img = np.asarray(img, dtype=np.float64)
        n = img.shape[-1]
        c = (n - 1) / 2.0
        rr, cc = np.mgrid[0:n, 0:n].astype(np.float64)
        py, px = rr - c, cc - c
        radial = 1.0 + self.barrel * (py ** 2 + px ** 2) / n ** 2
        sy = c + py / self.magnification * radial + self.shift[0]
        sx = c + px / self.magnification * radial + self.shift[1]
        if img.ndim == 2:
            return ndimage.map_coordinates(img, [sy, sx], order=1, mode="constant", cval=0.0)
        return np.stack([ndimage.map_coordinates(z, [sy, sx], order=1, mode="constant")
                         for z in img])


def probe_responses(g, kernel, distortion=None, probes=None):
    """Sensor images for every probe of a (possibly distorted) blur system."""
    probes = probe_schedule(g) if probes is None else probes
    scene = probes.bits.astype(np.float64)
    if distortion is not None:
        scene = distortion.apply(scene)
    return subsample(blur(scene, kernel), g)


# -- serialization --------------------------------------------------------------

def save_weights(w, stem):
    """Write ``<stem>_k<j>.mtx`` per kernel plus a ``<stem>.json`` header."""
    stem = Path(stem)
    files = []
    for j, m in enumerate(w.matrices):
        p = stem.with_name(f"{stem.name}_k{j}.mtx")
        mbio.write_matrix(p, m)
        files.append(p.name)
    header = {
        "geometry": {"mask_side": w.geometry.mask_side, "sensor_side": w.geometry.sensor_side,
                     "scene_side": w.geometry.scene_side},
        "kernel_count": w.kernel_count,
        "sparsity_threshold": w.sparsity_threshold,
        "matrices": files,
    }
    hp = stem.with_suffix(".json")
    hp.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    return [hp] + [stem.with_name(f) for f in files]


def load_weights(header_path):
    header_path = Path(header_path)
    h = json.loads(header_path.read_text())
    g = Geometry(**h["geometry"])
    mats = tuple(sparse.csc_matrix(mbio.read_matrix(header_path.with_name(f)))
                 for f in h["matrices"])
    return CalibratedWeights(g, mats, float(h["sparsity_threshold"]))
