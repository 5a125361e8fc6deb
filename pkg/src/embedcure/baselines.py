"""Baseline embedders: PCA projection and exact t-SNE with a configurable
exaggeration schedule.

t-SNE here is the O(n^2) exact variant: per-point bisection matches the
Shannon entropy of each conditional distribution to log(perplexity), the
joint P matrix is symmetrized and normalized, and gradient descent runs on
the KL objective with a Student-t low-dimensional kernel. Exaggeration
multiplies the attractive (P) term: the standard early factor of 12 for the
first phase, then a main factor of 1 (regular) or e.g. 4 ("exaggerated",
which pulls clusters much tighter).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ParameterError
from .features import FeatureMatrix
from .layout import Embedding

ENTROPY_TOL = 1e-5
ENTROPY_MAX_ITERS = 100


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 30.0
    early_exaggeration: float = 12.0
    early_steps: int = 250
    main_exaggeration: float = 1.0
    main_steps: int = 500
    learning_rate: float = 200.0
    momentum_early: float = 0.5
    momentum_late: float = 0.8
    momentum_switch_step: int = 250
    rng_seed: int = 0

    def __post_init__(self):
        if self.perplexity <= 0:
            raise ParameterError("perplexity must be positive")
        if self.early_exaggeration < 1 or self.main_exaggeration < 1:
            raise ParameterError("exaggeration factors must be >= 1")
        if self.learning_rate <= 0:
            raise ParameterError("learning_rate must be positive")


# ---------------------------------------------------------------------------
# PCA


def _power_iteration_symmetric(mat: np.ndarray, seed: int, iters: int = 2000,
                               tol: float = 1e-12) -> tuple[np.ndarray, float]:
    """Dominant eigenpair of a symmetric PSD matrix by power iteration."""
    rng = np.random.RandomState(seed)
    v = rng.normal(size=mat.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = mat @ v
        norm = np.linalg.norm(w)
        if norm < 1e-15:
            return v, 0.0
        w /= norm
        if np.linalg.norm(w - v) < tol or np.linalg.norm(w + v) < tol:
            v = w
            break
        v = w
    lam = float(v @ mat @ v)
    return v, lam


def principal_directions(centered: np.ndarray, dims: int,
                         seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Top principal directions of centered data via power iteration with
    deflation on the covariance matrix.

    Returns (directions: dims x d, variances: dims). Directions with
    (numerically) zero variance are zero-filled.
    """
    n, d = centered.shape
    cov = (centered.T @ centered) / max(n - 1, 1)
    total = np.trace(cov)
    dirs = np.zeros((dims, d))
    variances = np.zeros(dims)
    work = cov.copy()
    for c in range(dims):
        v, lam = _power_iteration_symmetric(work, seed + c)
        if lam <= max(total, 1.0) * 1e-12:
            warnings.warn(
                f"data rank < {dims}; zero-filling remaining principal components"
            )
            break
        # sign convention: largest-magnitude loading positive
        peak = np.argmax(np.abs(v))
        if v[peak] < 0:
            v = -v
        dirs[c] = v
        variances[c] = lam
        work = work - lam * np.outer(v, v)
    return dirs, variances


def pca_project(m: FeatureMatrix, dims: int = 2) -> Embedding:
    """Mean-centered projection onto the top principal directions."""
    if dims > m.n_dims:
        raise ParameterError(f"dims={dims} exceeds n_dims={m.n_dims}")
    x = m.values.astype(np.float64)
    centered = x - x.mean(axis=0, keepdims=True)
    dirs, _ = principal_directions(centered, dims)
    coords = centered @ dirs.T
    return Embedding(coords=coords.astype(np.float32), method="pca",
                     config_hash="pca", rng_seed=0)


# ---------------------------------------------------------------------------
# t-SNE


def _conditional_row(dsq_row: np.ndarray, perplexity: float) -> np.ndarray:
    """Conditional probabilities for one point, with precision found by
    bisection so the row entropy hits log(perplexity)."""
    target = np.log(perplexity)
    beta, beta_lo, beta_hi = 1.0, 0.0, np.inf
    p = np.empty_like(dsq_row)
    for _ in range(ENTROPY_MAX_ITERS):
        np.exp(-dsq_row * beta, out=p)
        s = p.sum()
        if s <= 0:
            entropy = 0.0
            p[:] = 0
        else:
            entropy = np.log(s) + beta * float(dsq_row @ p) / s
        diff = entropy - target
        if abs(diff) < ENTROPY_TOL:
            break
        if diff > 0:
            beta_lo = beta
            beta = beta * 2.0 if beta_hi == np.inf else 0.5 * (beta_lo + beta_hi)
        else:
            beta_hi = beta
            beta = 0.5 * (beta_lo + beta_hi)
    s = p.sum()
    if s <= 0:
        raise NumericError("degenerate conditional distribution in t-SNE")
    return p / s


def joint_probabilities(x: np.ndarray, perplexity: float) -> np.ndarray:
    """Symmetric joint P matrix; rows calibrated to log(perplexity) entropy."""
    n = x.shape[0]
    sq = (x ** 2).sum(axis=1)
    dsq = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(dsq, 0.0, out=dsq)
    cond = np.zeros((n, n))
    mask = ~np.eye(n, dtype=bool)
    for i in range(n):
        cond[i, mask[i]] = _conditional_row(dsq[i, mask[i]], perplexity)
    p = (cond + cond.T) / (2.0 * n)
    return p


def tsne_gradient(y: np.ndarray, p: np.ndarray, exaggeration: float = 1.0
                  ) -> np.ndarray:
    """Exact gradient of the (exaggerated) KL objective at layout y."""
    n = y.shape[0]
    sq = (y ** 2).sum(axis=1)
    dsq = sq[:, None] + sq[None, :] - 2.0 * (y @ y.T)
    num = 1.0 / (1.0 + dsq)
    np.fill_diagonal(num, 0.0)
    q = num / num.sum()
    pq = (exaggeration * p - q) * num
    grad = 4.0 * ((np.diag(pq.sum(axis=1)) - pq) @ y)
    return grad


def tsne_objective(y: np.ndarray, p: np.ndarray, exaggeration: float = 1.0) -> float:
    """Objective whose gradient `tsne_gradient` computes (KL up to a constant
    when exaggeration == 1)."""
    n = y.shape[0]
    sq = (y ** 2).sum(axis=1)
    dsq = sq[:, None] + sq[None, :] - 2.0 * (y @ y.T)
    num = 1.0 / (1.0 + dsq)
    np.fill_diagonal(num, 0.0)
    attract = -exaggeration * float((p * np.log(np.maximum(num, 1e-300))).sum())
    repulse = float(np.log(num.sum()))
    return attract + repulse


def tsne_embed(m: FeatureMatrix, cfg: TsneConfig) -> Embedding:
    """Exact t-SNE with early then main exaggeration phases."""
    n = m.n_samples
    if n < 10:
        raise ParameterError("t-SNE requires at least 10 points")
    if cfg.perplexity >= (n - 1) / 3:
        raise ParameterError(
            f"perplexity {cfg.perplexity} infeasible for n={n}; need < {(n - 1) / 3:.1f}"
        )
    x = m.values.astype(np.float64)
    p = joint_probabilities(x, cfg.perplexity)

    rng = np.random.RandomState(cfg.rng_seed)
    y = rng.normal(scale=1e-4, size=(n, 2))
    velocity = np.zeros_like(y)
    schedule = [(cfg.early_steps, cfg.early_exaggeration),
                (cfg.main_steps, cfg.main_exaggeration)]
    step = 0
    for phase_steps, factor in schedule:
        for _ in range(phase_steps):
            grad = tsne_gradient(y, p, factor)
            momentum = (cfg.momentum_early if step < cfg.momentum_switch_step
                        else cfg.momentum_late)
            velocity = momentum * velocity - cfg.learning_rate * grad
            y = y + velocity
            y = y - y.mean(axis=0, keepdims=True)
            step += 1
    if not np.isfinite(y).all():
        raise NumericError("t-SNE produced non-finite coordinates")
    return Embedding(coords=y.astype(np.float32), method="tsne",
                     config_hash=f"tsne-x{cfg.main_exaggeration:g}",
                     rng_seed=cfg.rng_seed)
