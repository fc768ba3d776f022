"""
Image-quality scores and the corrections applied before scoring.

SSIM uses the usual reference constants: an 11x11 Gaussian window with
sigma 1.5, K1 = 0.01, K2 = 0.03, evaluated only where the window fits
inside the image.  The dynamic range is the ground-truth peak.
"""

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .errors import AllDarkBackground, DimensionMismatch, TrimTooLarge

PSNR_CAP_DB = 300.0


@dataclass(frozen=True)
class QualityReport:
    mse: float
    relative_error: float
    psnr_db: float
    ssim: float

    def as_row(self):
        return [self.mse, self.relative_error, self.psnr_db, self.ssim]

    FIELDS = ("mse", "relative_error", "psnr_db", "ssim")


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"images differ in shape: {a.shape} vs {b.shape}")
    return a, b


def gaussian_window(size=11, sigma=1.5):
    r = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(r ** 2) / (2 * sigma ** 2))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(a, b, data_range=None, win_size=11, sigma=1.5, k1=0.01, k2=0.03):
    """Mean structural similarity.  ``data_range`` defaults to ``max(b)``."""
    a, b = _pair(a, b)
    if min(a.shape) < win_size:
        raise DimensionMismatch(f"images smaller than the {win_size}px SSIM window")
    L = float(b.max()) if data_range is None else float(data_range)
    c1, c2 = (k1 * L) ** 2, (k2 * L) ** 2
    w = gaussian_window(win_size, sigma)

    def filt(z):
        return signal.correlate2d(z, w, mode="valid")

    mu_a, mu_b = filt(a), filt(b)
    saa = filt(a * a) - mu_a ** 2
    sbb = filt(b * b) - mu_b ** 2
    sab = filt(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * sab + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (saa + sbb + c2)
    return float(np.mean(num / den))


def psnr(mse_value, peak):
    if mse_value <= 0:
        return PSNR_CAP_DB
    return float(min(PSNR_CAP_DB, 10.0 * np.log10(peak ** 2 / mse_value)))


def quality(estimate, truth):
    est, tru = _pair(estimate, truth)
    err = est - tru
    m = float(np.mean(err ** 2))
    tn = np.linalg.norm(tru)
    re = float(np.linalg.norm(err) / tn) if tn > 0 else float("inf")
    # symmetric in its inputs once the dynamic range is pinned to the truth peak
    s = ssim(est, tru, data_range=float(tru.max()))
    return QualityReport(m, re, psnr(m, float(tru.max())), s)


def illumination_correct(estimate, background, eps=0.05):
    """Divide by the flat-field background scaled to a peak of 1.

    Pixels whose normalized background is below ``eps`` are left as they
    are.  Returns ``(corrected, flagged)`` where ``flagged`` marks them.
    """
    est, bg = _pair(estimate, background)
    peak = bg.max()
    if not peak > 0:
        raise AllDarkBackground("background has no positive pixels")
    norm = bg / peak
    flagged = norm < eps
    out = est.copy()
    ok = ~flagged
    out[ok] = est[ok] / norm[ok]
    return out, flagged


def _overlap_matrix(n_in, n_out, lo=0.0, hi=None):
    """Box-averaging matrix taking samples ``[lo, hi)`` of an n_in grid to n_out bins."""
    hi = float(n_in) if hi is None else hi
    edges = lo + (hi - lo) * np.arange(n_out + 1) / n_out
    M = np.zeros((n_out, n_in))
    for i in range(n_out):
        a, b = edges[i], edges[i + 1]
        j0, j1 = int(np.floor(a)), int(np.ceil(b))
        for j in range(max(j0, 0), min(j1, n_in)):
            M[i, j] = max(0.0, min(b, j + 1) - max(a, j))
        M[i] /= b - a
    return M


def area_resample(img, out_shape):
    """Resize by exact area averaging (pixels treated as unit squares)."""
    img = np.asarray(img, dtype=np.float64)
    Ry = _overlap_matrix(img.shape[0], out_shape[0])
    Rx = _overlap_matrix(img.shape[1], out_shape[1])
    return Ry @ img @ Rx.T


def register_crop(truth_hi, estimate, max_trim_px=8):
    """Search edge trims of a high-res truth that best match the estimate.

    Every combination of (left, right, top, bottom) trims in
    ``0..max_trim_px`` is area-averaged to the estimate size and scored by
    MSE.  Returns ``(aligned_truth, (l, r, t, b), mse)``; ties go to the
    smallest total trim.
    """
    hi = np.asarray(truth_hi, dtype=np.float64)
    est = np.asarray(estimate, dtype=np.float64)
    H, W = hi.shape
    h, w = est.shape
    if max_trim_px < 0:
        raise TrimTooLarge("max_trim_px must be >= 0")
    if H < h or W < w:
        raise TrimTooLarge("truth is smaller than the estimate")
    if H - 2 * max_trim_px < h or W - 2 * max_trim_px < w:
        raise TrimTooLarge(f"trimming {max_trim_px}px per side leaves less than {est.shape}")
    T = range(max_trim_px + 1)
    # vertical and horizontal trims separate: reduce rows first, then columns
    rows = {(t, b): _overlap_matrix(H, h, t, H - b) @ hi for t in T for b in T}
    cols = {(l, r): _overlap_matrix(W, w, l, W - r) for l in T for r in T}
    best = None
    for (t, b), ry in rows.items():
        for (l, r), rx in cols.items():
            cand = ry @ rx.T
            m = float(np.mean((cand - est) ** 2))
            key = (m, l + r + t + b, (l, r, t, b))
            if best is None or key < best[0]:
                best = (key, cand)
    (m, _, trim), aligned = best
    return aligned, trim, m


def _keys_weights(t, a=-0.5):
    """Cubic convolution weights for the 4 taps at offsets -1, 0, 1, 2."""
    d = np.stack([1 + t, t, 1 - t, 2 - t])
    ad = np.abs(d)
    return np.where(ad <= 1, (a + 2) * ad ** 3 - (a + 3) * ad ** 2 + 1,
                    np.where(ad < 2, a * ad ** 3 - 5 * a * ad ** 2 + 8 * a * ad - 4 * a, 0.0))


def _cubic_matrix(n_in, n_out, a=-0.5):
    scale = n_in / n_out
    pos = (np.arange(n_out) + 0.5) * scale - 0.5
    base = np.floor(pos).astype(int)
    wts = _keys_weights(pos - base, a)
    M = np.zeros((n_out, n_in))
    for tap in range(4):
        idx = np.clip(base - 1 + tap, 0, n_in - 1)
        np.add.at(M, (np.arange(n_out), idx), wts[tap])
    return M


def bicubic_resize(img, out_shape, a=-0.5):
    """Separable cubic-convolution resize (Catmull-Rom for a = -0.5).

    Pixel centers are aligned (half-pixel convention); samples beyond the
    border repeat the edge pixel.
    """
    img = np.asarray(img, dtype=np.float64)
    return _cubic_matrix(img.shape[0], out_shape[0], a) @ img @ _cubic_matrix(
        img.shape[1], out_shape[1], a).T


def bicubic_baseline(scene, geometry):
    """Scene block-averaged to the sensor grid, then cubic-upsampled back."""
    b = geometry.sensor_block
    n = geometry.sensor_side
    low = np.asarray(scene, dtype=np.float64).reshape(n, b, n, b).mean(axis=(1, 3))
    return bicubic_resize(low, geometry.scene_shape)
