"""
Tikhonov-regularized least squares: ``x = (A^T A + delta I)^{-1} A^T Y``.

``solve`` either factors the explicit normal matrix (Cholesky) or runs
conjugate gradients on the normal equations using only ``forward`` and
``adjoint``.  For sweeps over many deltas, :class:`DirectSolver` can hold
an eigendecomposition of ``A^T A`` so that each extra delta costs only
two matrix-vector products.
"""

from dataclasses import dataclass
import logging
import warnings

import numpy as np
from scipy import linalg

from .errors import DimensionMismatch, NotConverged
from .model import DEFAULT_BUDGET_BYTES, adjoint, gram, normal_apply

log = logging.getLogger(__name__)

DIRECT = "direct"
CG = "cg"


@dataclass(frozen=True)
class TikhonovConfig:
    delta: float
    solver: str = DIRECT
    cg_tol: float = 1e-10
    cg_max_iter: int = 2000

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be > 0")
        if self.solver not in (DIRECT, CG):
            raise ValueError(f"unknown solver {self.solver!r}")
        if not 0 < self.cg_tol < 1:
            raise ValueError("cg_tol must be in (0, 1)")
        if self.cg_max_iter < 1:
            raise ValueError("cg_max_iter must be >= 1")


@dataclass
class ReconResult:
    estimate: np.ndarray
    delta_used: float
    solver_iterations: int
    residual_norm: float  # ||(A^T A + delta I) x - A^T Y|| / ||A^T Y||
    converged: bool = True


def _relative(res, ref):
    ref = np.linalg.norm(ref)
    return float(np.linalg.norm(res) / ref) if ref > 0 else float(np.linalg.norm(res))


class DirectSolver:
    """Dense normal-matrix solver bound to one operator.

    ``method="cholesky"`` factors ``A^T A + delta I`` for each new delta
    (the latest factorization is cached).  ``method="eigh"`` diagonalizes
    ``A^T A`` once and then solves any delta in O(R^2).
    """

    def __init__(self, op, method="cholesky", gram_matrix=None,
                 budget_bytes=DEFAULT_BUDGET_BYTES):
        if method not in ("cholesky", "eigh"):
            raise ValueError(f"unknown method {method!r}")
        self.op = op
        self.method = method
        R = op.geometry.n_scene
        if R * R * 8 * 2 > budget_bytes:
            from .errors import BudgetExceeded
            raise BudgetExceeded(R * R * 16, budget_bytes, "dense normal matrix")
        G = gram(op, budget_bytes) if gram_matrix is None else gram_matrix
        self.G = G.toarray() if hasattr(G, "toarray") else np.asarray(G, dtype=np.float64)
        self._factor = None
        self._eig = None
        if method == "eigh":
            self._eig = linalg.eigh(self.G, driver="evd")

    @property
    def eigenvalues(self):
        if self._eig is None:
            self._eig = linalg.eigh(self.G, driver="evd")
        return self._eig[0]

    def rhs(self, ys):
        return adjoint(self.op, ys).ravel()

    def solve_rhs(self, b, delta):
        if self.method == "eigh":
            w, V = self._eig
            return V @ ((V.T @ b) / (w + delta))
        if self._factor is None or self._factor[0] != delta:
            Gd = self.G.copy()
            Gd[np.diag_indices_from(Gd)] += delta
            self._factor = (delta, linalg.cho_factor(Gd, lower=True, check_finite=False))
        return linalg.cho_solve(self._factor[1], b, check_finite=False)

    def residual(self, x, b, delta):
        return _relative(self.G @ x + delta * x - b, b)

    def solve(self, ys, delta):
        b = self.rhs(ys)
        x = self.solve_rhs(b, delta)
        return ReconResult(x.reshape(self.op.geometry.scene_shape), float(delta), 0,
                           self.residual(x, b, delta))


def conjugate_gradient(apply, b, tol=1e-10, max_iter=2000, x0=None):
    """Plain CG for a symmetric positive definite ``apply``.

    Stops when ``||r|| <= tol * ||b||``.  Returns ``(x, iterations, rel_residual)``
    for the iterate with the smallest residual seen.
    """
    x = np.zeros_like(b) if x0 is None else x0.copy()
    r = b - apply(x) if x0 is not None else b.copy()
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros_like(b), 0, 0.0
    p = r.copy()
    rr = r @ r
    best = (x.copy(), np.sqrt(rr) / bnorm)
    it = 0
    while it < max_iter and np.sqrt(rr) > tol * bnorm:
        Ap = apply(p)
        alpha = rr / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        rr_new = r @ r
        p = r + (rr_new / rr) * p
        rr = rr_new
        it += 1
        if np.sqrt(rr) / bnorm < best[1]:
            best = (x.copy(), np.sqrt(rr) / bnorm)
    return best[0], it, best[1]


def solve(op, ys, cfg, solver=None):
    """Reconstruct the scene from K measurements.

    ``solver`` may be a prepared :class:`DirectSolver` for ``op`` (direct
    mode only), which avoids rebuilding ``A^T A``.
    """
    g = op.geometry
    ys = np.asarray(ys, dtype=np.float64)
    if ys.shape != (op.K,) + g.sensor_shape:
        raise DimensionMismatch(f"measurements {ys.shape} do not match operator "
                                f"{(op.K,) + g.sensor_shape}")
    if cfg.solver == DIRECT:
        solver = solver or DirectSolver(op)
        return solver.solve(ys, cfg.delta)

    b = adjoint(op, ys).ravel()
    delta = cfg.delta

    def apply(v):
        return normal_apply(op, v.reshape(g.scene_shape)).ravel() + delta * v

    x, it, _ = conjugate_gradient(apply, b, cfg.cg_tol, cfg.cg_max_iter)
    res = _relative(apply(x) - b, b)
    converged = res <= cfg.cg_tol
    if not converged:
        warnings.warn(NotConverged(f"CG stopped after {it} iterations at relative "
                                   f"residual {res:.3g} (tol {cfg.cg_tol:g})"), stacklevel=2)
    return ReconResult(x.reshape(g.scene_shape), float(delta), it, res, converged)


def solve_dense(A, y, delta):
    """Tikhonov solution for an explicit matrix (e.g. the stacked 1D model)."""
    A = A.toarray() if hasattr(A, "toarray") else np.asarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if A.shape[0] != y.size:
        raise DimensionMismatch(f"A has {A.shape[0]} rows, y has {y.size} entries")
    G = A.T @ A
    G[np.diag_indices_from(G)] += delta
    b = A.T @ y
    x = linalg.cho_solve(linalg.cho_factor(G, lower=True), b)
    return ReconResult(x, float(delta), 0, _relative(G @ x - b, b))


def estimate_lambda_max(op, iterations=30, seed=0):
    """Power-iteration estimate of the largest eigenvalue of ``A^T A``."""
    g = op.geometry
    v = np.random.default_rng(seed).standard_normal(g.n_scene)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iterations):
        w = normal_apply(op, v.reshape(g.scene_shape)).ravel()
        lam = float(v @ w)
        n = np.linalg.norm(w)
        if n == 0:
            return 0.0
        v = w / n
    return lam


def default_delta_grid(op, n=25, lo=1e-6, hi=1e2, lambda_max=None):
    """``n`` log-spaced deltas in ``[lo, hi] * lambda_max(A^T A)``."""
    if lambda_max is None:
        lambda_max = estimate_lambda_max(op)
    return list(np.logspace(np.log10(lo), np.log10(hi), n) * lambda_max)


def mse(a, b):
    return float(np.mean((np.asarray(a) - np.asarray(b)) ** 2))


def sweep_delta(op, ys, ground_truth, grid, solver=None):
    """Pick the delta minimizing MSE against ground truth.

    Returns ``(best_delta, per_delta_mse)``; ``per_delta_mse`` is aligned
    with ``grid`` and holds ``nan`` for points whose solve failed.  Among
    MSEs within 1e-12 of the best, the smallest delta wins.
    """
    grid = [float(d) for d in grid]
    if not grid or min(grid) <= 0:
        raise ValueError("delta grid must be non-empty and positive")
    truth = np.asarray(ground_truth, dtype=np.float64)
    if truth.shape != op.geometry.scene_shape:
        raise DimensionMismatch("ground truth must be at scene resolution")
    solver = solver or DirectSolver(op, method="eigh" if len(grid) > 3 else "cholesky")
    b = solver.rhs(ys)
    curve = []
    for d in grid:
        try:
            x = solver.solve_rhs(b, d)
            curve.append(mse(x.reshape(truth.shape), truth))
        except (linalg.LinAlgError, FloatingPointError) as exc:
            warnings.warn(f"delta={d:g} excluded from sweep: {exc}", RuntimeWarning, stacklevel=2)
            curve.append(float("nan"))
    valid = [(m, d) for m, d in zip(curve, grid) if np.isfinite(m)]
    if not valid:
        raise RuntimeError("every delta in the sweep failed")
    best_m = min(m for m, _ in valid)
    best_d = min(d for m, d in valid if m <= best_m + 1e-12)
    return best_d, curve


def reconstruct_best(op, ys, ground_truth, grid=None, solver=None):
    """Sweep delta, then return the ReconResult at the MSE-optimal delta.

    The default grid is scaled by the exact largest eigenvalue when the
    solver holds an eigendecomposition, else by a power-iteration estimate.
    """
    solver = solver or DirectSolver(op, method="eigh")
    if grid is None:
        lam = float(solver.eigenvalues[-1]) if solver.method == "eigh" else None
        grid = default_delta_grid(op, lambda_max=lam)
    best, curve = sweep_delta(op, ys, ground_truth, grid, solver)
    return solver.solve(ys, best), curve
