"""
Linear forward model of a random-mask imaging system with blur.

A measurement is ``y_k = S B_k D_k x``: the scene ``x`` (scene_side^2
pixels) is modulated by an upscaled binary mask pattern, blurred by a
point spread function, then block-averaged onto the sensor.  Stacking K
measurements gives the system operator ``A``.  The operator is available
matrix-free (``forward`` / ``adjoint``) and as explicit sparse matrices
(``materialize`` / ``gram``).

Conventions
-----------
* Images are 2D float64 arrays indexed ``[row, col]``; vectorization is
  row-major.
* Blur uses zero padding: light falling off the image edge is lost.
* The sensor takes the block *mean*, not the sum.
* A set of K measurements is a ``(K, sensor_side, sensor_side)`` array.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import ndimage, sparse

from .errors import (BudgetExceeded, DimensionMismatch, KernelLargerThanImage,
                     NonIntegralFactor)
from .kernels import BlurKernel

DEFAULT_BUDGET_BYTES = 2 * 1024 ** 3


@dataclass(frozen=True)
class Geometry:
    """Sizes (per axis) of mask, sensor and reconstruction grids."""

    mask_side: int
    sensor_side: int
    scene_side: int

    def __post_init__(self):
        for name in ("mask_side", "sensor_side", "scene_side"):
            if int(getattr(self, name)) < 1:
                raise NonIntegralFactor(f"{name} must be >= 1")
        if self.scene_side % self.mask_side:
            raise NonIntegralFactor(
                f"scene_side {self.scene_side} is not a multiple of mask_side {self.mask_side}")
        if self.scene_side % self.sensor_side:
            raise NonIntegralFactor(
                f"scene_side {self.scene_side} is not a multiple of sensor_side {self.sensor_side}")

    @property
    def upscale_c(self):
        return self.scene_side // self.mask_side

    @property
    def sensor_block(self):
        return self.scene_side // self.sensor_side

    @property
    def n_mask(self):
        return self.mask_side ** 2

    @property
    def n_sensor(self):
        return self.sensor_side ** 2

    @property
    def n_scene(self):
        return self.scene_side ** 2

    @property
    def scene_shape(self):
        return (self.scene_side, self.scene_side)

    @property
    def sensor_shape(self):
        return (self.sensor_side, self.sensor_side)

    @property
    def mask_shape(self):
        return (self.mask_side, self.mask_side)


def make_geometry(mask_side, sensor_side, superres_factor):
    """Geometry for superresolving a ``mask_side`` mask by an *area* factor.

    ``superres_factor`` must be a perfect square (4 means 2x per axis).
    """
    if min(mask_side, sensor_side, superres_factor) < 1:
        raise NonIntegralFactor("all geometry arguments must be >= 1")
    per_axis = math.isqrt(superres_factor)
    if per_axis * per_axis != superres_factor:
        raise NonIntegralFactor(
            f"superres_factor {superres_factor} is not a perfect square")
    scene_side = mask_side * per_axis
    if scene_side % sensor_side:
        raise NonIntegralFactor(
            f"sensor_side {sensor_side} does not divide scene_side {scene_side}")
    return Geometry(int(mask_side), int(sensor_side), int(scene_side))


def _check_shape(arr, shape, what):
    if arr.shape[-2:] != tuple(shape):
        raise DimensionMismatch(f"{what} has shape {arr.shape[-2:]}, expected {tuple(shape)}")


def upscale_patterns(patterns, g):
    """Replicate each mask element over its c x c block of scene pixels."""
    p = np.asarray(patterns)
    _check_shape(p, g.mask_shape, "pattern")
    c = g.upscale_c
    return np.repeat(np.repeat(p, c, axis=-2), c, axis=-1).astype(np.float64)


def mask_index(g):
    """Flat mask-element index for every scene pixel (row-major, length R)."""
    rows = np.arange(g.scene_side) // g.upscale_c
    return (rows[:, None] * g.mask_side + rows[None, :]).ravel()


def modulate(x, pattern, g):
    x = np.asarray(x, dtype=np.float64)
    _check_shape(x, g.scene_shape, "scene")
    return x * upscale_patterns(pattern, g)


def _raster(kernel):
    return kernel.raster if isinstance(kernel, BlurKernel) else np.atleast_2d(
        np.asarray(kernel, dtype=np.float64))


def blur(x, kernel):
    """Zero-padded 'same'-size convolution with the kernel raster.

    Works on a single image or on a stack ``(..., H, W)``.
    """
    x = np.asarray(x, dtype=np.float64)
    k = _raster(kernel)
    if k.shape[0] > x.shape[-2] or k.shape[1] > x.shape[-1]:
        raise KernelLargerThanImage(f"kernel {k.shape} larger than image {x.shape[-2:]}")
    if k.size == 1:
        return x * k[0, 0]
    k = k.reshape((1,) * (x.ndim - 2) + k.shape)
    return ndimage.convolve(x, k, mode="constant", cval=0.0)


def blur_adjoint(y, kernel):
    """Adjoint of :func:`blur` (correlation with the same raster)."""
    y = np.asarray(y, dtype=np.float64)
    k = _raster(kernel)
    if k.shape[0] > y.shape[-2] or k.shape[1] > y.shape[-1]:
        raise KernelLargerThanImage(f"kernel {k.shape} larger than image {y.shape[-2:]}")
    if k.size == 1:
        return y * k[0, 0]
    k = k.reshape((1,) * (y.ndim - 2) + k.shape)
    return ndimage.correlate(y, k, mode="constant", cval=0.0)


def subsample(x, g):
    """Block mean over ``sensor_block x sensor_block`` tiles (stack-aware)."""
    x = np.asarray(x, dtype=np.float64)
    _check_shape(x, g.scene_shape, "scene")
    b, s = g.sensor_block, g.sensor_side
    return x.reshape(x.shape[:-2] + (s, b, s, b)).mean(axis=(-3, -1))


def subsample_adjoint(y, g):
    y = np.asarray(y, dtype=np.float64)
    _check_shape(y, g.sensor_shape, "measurement")
    b = g.sensor_block
    return np.repeat(np.repeat(y, b, axis=-2), b, axis=-1) / (b * b)


class SystemOperator:
    """The stacked operator A for K patterns and their blur kernels.

    Parameters
    ----------
    geometry : Geometry
    patterns : array (K, mask_side, mask_side) of {0, 1}
    kernels : BlurKernel or sequence of K BlurKernels
        A single kernel is used for every measurement.
    weighting : CalibratedWeights, optional
        Measured ``W`` matrices.  When given, measurement k uses the
        weight matrix of its kernel group instead of ``S B_k``.  Groups
        are the distinct kernels in order of first appearance.
    """

    def __init__(self, geometry, patterns, kernels=None, weighting=None):
        self.geometry = geometry
        p = np.asarray(patterns)
        if p.ndim == 2:
            p = p[None]
        _check_shape(p, geometry.mask_shape, "patterns")
        if p.shape[0] < 1:
            raise ValueError("need at least one pattern")
        self.patterns = np.ascontiguousarray(p, dtype=np.float64)
        self.patterns.setflags(write=False)
        K = self.patterns.shape[0]

        if kernels is None:
            if weighting is None:
                raise ValueError("need kernels or calibrated weighting")
            if weighting.kernel_count != 1:
                raise ValueError("kernels must be given when weighting has several kernels")
            kernels = [None]
        if isinstance(kernels, BlurKernel):
            kernels = [kernels] * K
        kernels = list(kernels)
        if len(kernels) == 1 and K > 1:
            kernels = kernels * K
        if len(kernels) != K:
            raise DimensionMismatch(f"{len(kernels)} kernels for {K} patterns")
        self.kernels = tuple(kernels)

        unique, index = [], []
        for k in self.kernels:
            for j, u in enumerate(unique):
                if u is k:
                    index.append(j)
                    break
            else:
                unique.append(k)
                index.append(len(unique) - 1)
        self.unique_kernels = tuple(unique)
        self.kernel_index = np.array(index, dtype=np.int64)
        self.weighting = weighting
        if weighting is not None:
            if weighting.geometry != geometry:
                raise DimensionMismatch("weighting geometry differs from operator geometry")
            if weighting.kernel_count != len(unique):
                raise DimensionMismatch(
                    f"weighting has {weighting.kernel_count} kernels, operator has {len(unique)}")
        for k in unique:
            if k is not None:
                kr = k.raster
                if kr.shape[0] > geometry.scene_side or kr.shape[1] > geometry.scene_side:
                    raise KernelLargerThanImage(f"{k.name} does not fit the scene")

    @property
    def K(self):
        return self.patterns.shape[0]

    @property
    def shape(self):
        return (self.K * self.geometry.n_sensor, self.geometry.n_scene)

    def groups(self):
        """Yield ``(group_index, measurement_indices)`` per distinct kernel."""
        for j in range(len(self.unique_kernels)):
            yield j, np.flatnonzero(self.kernel_index == j)

    def subset(self, K):
        """Operator restricted to the first K measurements."""
        return SystemOperator(self.geometry, self.patterns[:K], list(self.kernels[:K]),
                              self.weighting)

    def weight_matrix(self, j):
        """Sparse ``W`` (M x R) of kernel group j."""
        if self.weighting is not None:
            return self.weighting.matrices[j]
        return weight_matrix(self.geometry, self.unique_kernels[j])

    def __repr__(self):
        names = [getattr(k, "name", "calibrated") for k in self.unique_kernels]
        return f"SystemOperator(K={self.K}, geometry={self.geometry}, kernels={names})"


def forward(op, x):
    """Noiseless measurements ``S B_k D_k x`` for all k, shape (K, s, s)."""
    g = op.geometry
    x = np.asarray(x, dtype=np.float64)
    _check_shape(x, g.scene_shape, "scene")
    d = upscale_patterns(op.patterns, g)
    out = np.empty((op.K,) + g.sensor_shape)
    for j, idx in op.groups():
        z = d[idx] * x
        if op.weighting is None:
            out[idx] = subsample(blur(z, op.unique_kernels[j]), g)
        else:
            W = op.weighting.matrices[j]
            out[idx] = (W @ z.reshape(len(idx), -1).T).T.reshape((len(idx),) + g.sensor_shape)
    return out


def adjoint(op, ys):
    """``A^T Y = sum_k D_k W_k^T y_k`` as a scene-resolution image."""
    g = op.geometry
    ys = np.asarray(ys, dtype=np.float64)
    if ys.shape != (op.K,) + g.sensor_shape:
        raise DimensionMismatch(
            f"measurements have shape {ys.shape}, expected {(op.K,) + g.sensor_shape}")
    d = upscale_patterns(op.patterns, g)
    out = np.zeros(g.scene_shape)
    for j, idx in op.groups():
        if op.weighting is None:
            back = blur_adjoint(subsample_adjoint(ys[idx], g), op.unique_kernels[j])
        else:
            W = op.weighting.matrices[j]
            back = (W.T @ ys[idx].reshape(len(idx), -1).T).T.reshape((len(idx),) + g.scene_shape)
        out += (d[idx] * back).sum(axis=0)
    return out


def normal_apply(op, x):
    """``A^T A x`` without forming any matrix."""
    return adjoint(op, forward(op, x))


def blur_matrix(g, kernel):
    """Sparse R x R zero-padded convolution matrix B."""
    n = g.scene_side
    k = _raster(kernel)
    hr, hc = k.shape[0] // 2, k.shape[1] // 2
    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    rows, cols, vals = [], [], []
    for u in range(k.shape[0]):
        for v in range(k.shape[1]):
            w = k[u, v]
            if w == 0.0:
                continue
            si, sj = ii - (u - hr), jj - (v - hc)
            ok = (si >= 0) & (si < n) & (sj >= 0) & (sj < n)
            rows.append((ii[ok] * n + jj[ok]))
            cols.append((si[ok] * n + sj[ok]))
            vals.append(np.full(ok.sum(), w))
    R = n * n
    return sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(R, R))


def sampling_matrix(g):
    """Sparse M x R block-mean sampling matrix S."""
    n, b = g.scene_side, g.sensor_block
    r = np.arange(n)
    sensor_of = ((r[:, None] // b) * g.sensor_side + (r[None, :] // b)).ravel()
    return sparse.csr_matrix((np.full(g.n_scene, 1.0 / (b * b)), (sensor_of, np.arange(g.n_scene))),
                             shape=(g.n_sensor, g.n_scene))


def weight_matrix(g, kernel):
    """``W = S B`` for a spatially invariant kernel, as CSR (M x R)."""
    W = (sampling_matrix(g) @ blur_matrix(g, kernel)).tocsr()
    W.sum_duplicates()
    W.sort_indices()
    return W


def _check_budget(nbytes, budget, what):
    if nbytes > budget:
        raise BudgetExceeded(nbytes, budget, what)


def materialize(op, budget_bytes=DEFAULT_BUDGET_BYTES):
    """Explicit sparse ``A`` (K*M x R), rows ordered measurement-major."""
    g = op.geometry
    Ws = [op.weight_matrix(j) for j in range(len(op.unique_kernels))]
    nnz = sum(Ws[j].nnz for j in op.kernel_index)
    _check_budget(nnz * 16 + (op.K * g.n_sensor + 1) * 8, budget_bytes, "materialized A")
    d = upscale_patterns(op.patterns, g).reshape(op.K, -1)
    blocks = []
    for k in range(op.K):
        blocks.append(Ws[op.kernel_index[k]] @ sparse.diags(d[k]))
    A = sparse.vstack(blocks, format="csr")
    return A


def gram(op, budget_bytes=DEFAULT_BUDGET_BYTES):
    """``A^T A = sum_k D_k W_k^T W_k D_k`` as a symmetric sparse CSR matrix.

    Per kernel group the sum collapses to ``(W^T W) * (P^T P)`` (entrywise),
    where ``P^T P`` counts how often two mask elements are open together.
    """
    g = op.geometry
    midx = mask_index(g)
    _check_budget(g.n_mask ** 2 * 8, budget_bytes, "pattern correlation")
    total = None
    for j, idx in op.groups():
        W = op.weight_matrix(j)
        WtW = (W.T @ W).tocoo()
        _check_budget(WtW.nnz * 32, budget_bytes, "gram")
        P = op.patterns[idx].reshape(len(idx), -1)
        C = P.T @ P
        data = WtW.data * C[midx[WtW.row], midx[WtW.col]]
        G = sparse.csr_matrix((data, (WtW.row, WtW.col)), shape=(g.n_scene, g.n_scene))
        total = G if total is None else total + G
    total = ((total + total.T) * 0.5).tocsr()
    total.sum_duplicates()
    total.sort_indices()
    return total
