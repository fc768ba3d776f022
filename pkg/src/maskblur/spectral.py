"""
Eigenvalue analysis of the normal matrix ``A^T A``.

Besides the generic spectrum report, this module carries an exact 1D
model for 2x superresolution with a symmetric three-tap blur ``[a b a]``.
There the sensor *sums* pairs of samples (S has rows ``[1 1 0 0 ...]``),
unlike the 2D model which averages blocks.  For random +-1 patterns the
expected normal matrix is block diagonal with 2x2 blocks

    [[a^2 + (a+b)^2, (a+b)^2      ],
     [(a+b)^2,       a^2 + (a+b)^2]]

whose eigenvalues are ``a^2 + 2(a+b)^2`` and ``a^2``.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg, sparse

from .errors import NotSymmetric, OddLength, ZeroOuterTap
from .simkit import philox

PLUS_MINUS_ONE = "plus_minus_one"
ZERO_ONE = "zero_one"

_DOMAIN_1D = 3


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray  # descending

    @property
    def lambda_max(self):
        return float(self.eigenvalues[0])

    @property
    def normalized(self):
        lmax = self.eigenvalues[0]
        if lmax <= 0:
            return np.zeros_like(self.eigenvalues)
        return self.eigenvalues / lmax

    def effective_rank(self, tau):
        """Number of eigenvalues with ``lambda_k / lambda_1 >= tau``."""
        return int(np.count_nonzero(self.normalized >= tau))

    @property
    def condition_number(self):
        lmax = self.eigenvalues[0]
        # eigenvalues within roundoff of zero (or below) count as singular
        lmin = max(self.eigenvalues[-1], -1e-12 * lmax)
        if lmax <= 0 or lmin <= 1e-12 * lmax:
            return float("inf")
        return float(lmax / lmin)

    def __len__(self):
        return len(self.eigenvalues)


def spectrum(gram_matrix, sym_tol=1e-10):
    """Full symmetric eigendecomposition (eigenvalues only), sorted descending."""
    G = gram_matrix.toarray() if sparse.issparse(gram_matrix) else np.asarray(gram_matrix,
                                                                               dtype=np.float64)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise NotSymmetric(f"matrix must be square, got {G.shape}")
    scale = np.abs(G).max(initial=0.0)
    asym = np.abs(G - G.T).max(initial=0.0)
    if asym > sym_tol * max(scale, np.finfo(float).tiny):
        raise NotSymmetric(f"asymmetry {asym:.3g} exceeds {sym_tol:g} relative")
    w = linalg.eigvalsh(G, driver="evd")
    return SpectrumReport(np.ascontiguousarray(w[::-1]))


def effective_superres_factor(report, geometry, noise_floor_tau):
    """Area superresolution supported at threshold tau: ``effective_rank / N``."""
    if not 0 < noise_floor_tau < 1:
        raise ValueError("noise_floor_tau must be in (0, 1)")
    return report.effective_rank(noise_floor_tau) / geometry.n_mask


def tau_from_psnr(psnr_db):
    """Relative eigenvalue floor matching a measurement PSNR: ``10**(-psnr/10)``."""
    return 10.0 ** (-psnr_db / 10.0)


# -- 1D model -----------------------------------------------------------------

@dataclass(frozen=True)
class SymmetricFilter1D:
    a: float
    b: float

    @property
    def taps(self):
        return np.array([self.a, self.b, self.a], dtype=np.float64)


def _check_even(R):
    if R < 2 or R % 2:
        raise OddLength(f"R must be even and >= 2, got {R}")


def blur_matrix_1d(R, filt):
    """R x R tridiagonal convolution with ``[a b a]``, truncated at the ends."""
    return (np.diag(np.full(R, float(filt.b)))
            + np.diag(np.full(R - 1, float(filt.a)), 1)
            + np.diag(np.full(R - 1, float(filt.a)), -1))


def sampling_matrix_1d(R):
    """(R/2) x R matrix summing adjacent pairs."""
    _check_even(R)
    return np.kron(np.eye(R // 2), np.ones((1, 2)))


def weight_matrix_1d(R, filt):
    return sampling_matrix_1d(R) @ blur_matrix_1d(R, filt)


def _block_mask(R):
    return np.kron(np.eye(R // 2), np.ones((2, 2)))


def expected_gram_1d(R, filt, pattern_model=PLUS_MINUS_ONE, exact=False):
    """Limit of ``(1/K) A^T A`` for random patterns.

    For +-1 patterns only same-element products survive the expectation,
    leaving the block-diagonal part of ``W^T W``.  For {0,1} patterns the
    default adds ``I/4 + 11^T/4`` to the +-1 matrix.  With ``exact=True``
    the {0,1} expectation is evaluated directly instead:
    ``W^T W * E[d d^T]`` with ``E[d d^T] = (blocks + 11^T) / 4``.
    """
    _check_even(R)
    WtW = weight_matrix_1d(R, filt).T @ weight_matrix_1d(R, filt)
    pm = WtW * _block_mask(R)
    if pattern_model == PLUS_MINUS_ONE:
        return pm
    if pattern_model != ZERO_ONE:
        raise ValueError(f"unknown pattern model {pattern_model!r}")
    if exact:
        return WtW * (_block_mask(R) + 1.0) / 4.0
    return pm + 0.25 * np.eye(R) + 0.25 * np.ones((R, R))


def random_patterns_1d(N, K, seed, pattern_model=PLUS_MINUS_ONE):
    """(K, N) i.i.d. patterns: uniform on {-1, +1} or Bernoulli(1/2) on {0, 1}."""
    rng = philox(seed, _DOMAIN_1D, 0)
    bits = rng.integers(0, 2, size=(K, N)).astype(np.float64)
    if pattern_model == PLUS_MINUS_ONE:
        return 2.0 * bits - 1.0
    if pattern_model == ZERO_ONE:
        return bits
    raise ValueError(f"unknown pattern model {pattern_model!r}")


def empirical_gram_1d(R, filt, K=50, seed=0, pattern_model=PLUS_MINUS_ONE, patterns=None):
    """``(1/K) sum_k D_k W^T W D_k`` for seeded (or given) patterns of length R/2."""
    _check_even(R)
    if patterns is None:
        if K < 1:
            raise ValueError("K must be >= 1")
        patterns = random_patterns_1d(R // 2, K, seed, pattern_model)
    P = np.atleast_2d(np.asarray(patterns, dtype=np.float64))
    if P.shape[1] != R // 2:
        raise ValueError(f"patterns must have R/2 = {R // 2} entries")
    D = np.repeat(P, 2, axis=1)
    W = weight_matrix_1d(R, filt)
    return (W.T @ W) * (D.T @ D) / P.shape[0]


def block_eigenvalues_1d(filt):
    """Closed-form eigenvalues of an interior block: ``(a^2 + 2(a+b)^2, a^2)``."""
    a, b = float(filt.a), float(filt.b)
    return a * a + 2 * (a + b) ** 2, a * a


def filter_condition_ratio(filt):
    """Ratio of the two block eigenvalues, ``(a^2 + 2(a+b)^2) / a^2``."""
    if filt.a == 0:
        raise ZeroOuterTap("outer tap a must be nonzero")
    hi, lo = block_eigenvalues_1d(filt)
    return hi / lo


@dataclass(frozen=True)
class FilterOptimum:
    """Both candidate optima for the center tap of ``[a b a]``.

    ``minimizer_b = -a`` is where the ratio formula reaches its minimum of 1.
    ``b = 0`` is the center tap sometimes quoted as optimal; the same
    formula gives 3 there, so the two disagree.
    """

    a: float
    minimizer_b: float
    ratio_at_minimizer: float
    quoted_b: float
    ratio_at_quoted_b: float

    @property
    def consistent(self):
        return self.ratio_at_minimizer == self.ratio_at_quoted_b


def filter_optima(a=1.0):
    return FilterOptimum(
        a=a,
        minimizer_b=-a,
        ratio_at_minimizer=filter_condition_ratio(SymmetricFilter1D(a, -a)),
        quoted_b=0.0,
        ratio_at_quoted_b=filter_condition_ratio(SymmetricFilter1D(a, 0.0)),
    )
