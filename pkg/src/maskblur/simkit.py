"""
Experiment generation: seeded mask patterns, scenes, and noisy measurements.

Random streams come from numpy's counter-based Philox generator.  Each
pattern (and each measurement's noise) gets its own key built from
``(seed, domain, k)``, so pattern k never depends on how many patterns
were requested.  Asking for 100 patterns returns the first 100 of the
500-pattern set.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io as mbio
from .errors import NonIntegralDownscale, TooManyPatterns, UnsupportedFormat
from .kernels import kernel_library as make_kernel_library  # noqa: F401  re-export
from .model import forward

HALF_ON = "half_on"
BERNOULLI = "bernoulli"
SINGLE_ELEMENT = "single_element"
SCHEMES = (HALF_ON, BERNOULLI, SINGLE_ELEMENT)

_DOMAIN_PATTERN = 1
_DOMAIN_NOISE = 2


def philox(seed, domain, k):
    """Generator for stream ``k`` of ``domain`` under ``seed``."""
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise ValueError("seed must be in [0, 2**64)")
    key = (seed << 64) | (int(domain) << 32) | int(k)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class PatternSet:
    bits: np.ndarray  # (K, side, side) uint8
    seed: int
    scheme: str

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=np.uint8)
        if b.ndim != 3 or b.shape[1] != b.shape[2]:
            raise ValueError("pattern bits must have shape (K, side, side)")
        if b.max(initial=0) > 1:
            raise ValueError("pattern entries must be 0 or 1")
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @property
    def side(self):
        return self.bits.shape[1]

    @property
    def K(self):
        return self.bits.shape[0]

    def __len__(self):
        return self.K

    def __getitem__(self, k):
        return self.bits[k]

    def prefix(self, K):
        return PatternSet(self.bits[:K], self.seed, self.scheme)


def _pattern(scheme, n, rng, k):
    p = np.zeros(n, dtype=np.uint8)
    if scheme == HALF_ON:
        # Generator.permutation is a Fisher-Yates shuffle
        p[rng.permutation(n)[: n // 2]] = 1
    elif scheme == BERNOULLI:
        p[:] = rng.integers(0, 2, size=n, dtype=np.uint8)
    else:
        p[k] = 1
    return p


def generate_patterns(g, K, scheme=HALF_ON, seed=0):
    """K mask patterns of ``g.mask_side`` squared elements."""
    if K < 1:
        raise ValueError("K must be >= 1")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown pattern scheme {scheme!r}")
    n = g.n_mask
    if scheme == SINGLE_ELEMENT and K > n:
        raise TooManyPatterns(f"single-element scheme allows at most {n} patterns, got {K}")
    bits = np.stack([_pattern(scheme, n, philox(seed, _DOMAIN_PATTERN, k), k)
                     for k in range(K)])
    return PatternSet(bits.reshape(K, g.mask_side, g.mask_side), int(seed), scheme)


@dataclass(frozen=True)
class NoiseModel:
    """Additive white Gaussian noise set by a target PSNR.

    ``sigma = peak / 10**(psnr/20)`` with ``peak`` the maximum of the
    ground-truth scene.
    """

    kind: str = "none"  # "none" | "gaussian_psnr"
    target_psnr_db: float = 40.0

    def __post_init__(self):
        if self.kind not in ("none", "gaussian_psnr"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not np.isfinite(self.target_psnr_db):
            raise ValueError("target_psnr_db must be finite")

    def sigma_for(self, scene):
        if self.kind == "none":
            return 0.0
        return float(np.max(scene)) / 10 ** (self.target_psnr_db / 20.0)


def simulate(op, x, noise=NoiseModel(), seed=0):
    """Forward model plus i.i.d. Gaussian noise on every sensor element."""
    y = forward(op, x)
    sigma = noise.sigma_for(x)
    if sigma == 0.0:
        return y
    for k in range(op.K):
        y[k] += sigma * philox(seed, _DOMAIN_NOISE, k).standard_normal(y[k].shape)
    return y


def block_mean(img, factor):
    """Average non-overlapping ``factor x factor`` blocks."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    if h % factor or w % factor:
        raise NonIntegralDownscale(f"{img.shape} is not divisible by {factor}")
    return img.reshape(h // factor, factor, w // factor, factor).mean(axis=(1, 3))


def scene_from_array(arr, g, maxval=None):
    """Block-average a square source image down to the scene grid, scaled to [0, 255].

    ``maxval`` is the full-scale value of the source (255 for 8-bit data);
    by default the source maximum is used.
    """
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise NonIntegralDownscale(f"source must be square, got {arr.shape}")
    side = arr.shape[0]
    if side < g.scene_side or side % g.scene_side:
        raise NonIntegralDownscale(
            f"source side {side} is not a multiple of scene side {g.scene_side}")
    if maxval is None:
        maxval = arr.max()
    scale = 255.0 / maxval if maxval > 0 else 1.0
    return block_mean(arr, side // g.scene_side) * scale


def load_scene(path, g):
    """Read a PGM or CSV image and bring it to the scene grid."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix in (".pgm", ".pnm"):
        img, maxval = mbio.read_pgm(path)
        return scene_from_array(img, g, maxval=maxval)
    if suffix == ".csv":
        return scene_from_array(mbio.read_image_csv(path), g)
    raise UnsupportedFormat(f"cannot read scenes from {suffix!r} files")


STANDARD_IMAGES = ("camera", "astronaut", "coffee")


def standard_image(name, multiple=64):
    """A classic test image from scikit-image as grayscale 0..255.

    The result is the central square crop whose side is the largest
    multiple of ``multiple`` that fits (512 for camera and astronaut, 384
    for coffee), so it block-averages exactly onto a 64-pixel scene.
    """
    from skimage import color, data

    img = getattr(data, name)()
    if img.ndim == 3:
        img = color.rgb2gray(img) * 255.0
    img = np.asarray(img, dtype=np.float64)
    n = (min(img.shape) // multiple) * multiple
    if n == 0:
        raise NonIntegralDownscale(f"{name} is smaller than {multiple}px")
    r0, c0 = (img.shape[0] - n) // 2, (img.shape[1] - n) // 2
    return img[r0:r0 + n, c0:c0 + n]
