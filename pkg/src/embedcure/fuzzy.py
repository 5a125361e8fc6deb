"""Fuzzy weighted-graph representation of a kNN graph.

Each point gets a local offset rho (distance to its nearest nonzero
neighbor) and a bandwidth sigma chosen by bisection so that the smoothed
neighbor weights sum to log2(k). Directed membership strengths are then
symmetrized with the probabilistic t-conorm w + w' - w*w'.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ParameterError, ValidationError
from .knn import NeighborGraph

BISECTION_MAX_ITERS = 64
BISECTION_TOL = 1e-5
SIGMA_LO_FACTOR = 1e-3
SIGMA_HI_FACTOR = 1e3
SIGMA_FLOOR = 1e-8


@dataclass(frozen=True)
class Calibration:
    rho: np.ndarray     # (n,) distance to nearest strictly-positive neighbor
    sigma: np.ndarray   # (n,) bandwidth
    clamped: np.ndarray  # (n,) bool, True where no bisection root existed


@dataclass(frozen=True)
class FuzzyGraph:
    """Sparse weighted graph with membership strengths in (0, 1]."""

    n: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    symmetric: bool

    def __post_init__(self):
        object.__setattr__(self, "rows", np.ascontiguousarray(self.rows, dtype=np.int64))
        object.__setattr__(self, "cols", np.ascontiguousarray(self.cols, dtype=np.int64))
        object.__setattr__(self, "weights", np.ascontiguousarray(self.weights, dtype=np.float64))
        if (self.rows == self.cols).any():
            raise ValidationError("fuzzy graph contains a self-edge")
        w = self.weights
        if w.size and ((w <= 0).any() or (w > 1).any() or not np.isfinite(w).all()):
            raise ValidationError("fuzzy weights must lie in (0, 1]")

    def matrix(self) -> sp.csr_matrix:
        m = sp.coo_matrix(
            (self.weights, (self.rows, self.cols)), shape=(self.n, self.n)
        ).tocsr()
        m.sum_duplicates()
        return m


def _smooth_sum(dists: np.ndarray, rho: float, sigma: float) -> float:
    shifted = np.maximum(dists - rho, 0.0)
    return float(np.exp(-shifted / sigma).sum())


def calibrate_row(dists: np.ndarray, target: float) -> tuple[float, float, bool]:
    """Calibrate one row; returns (rho, sigma, clamped)."""
    positive = dists[dists > 0]
    rho = float(positive.min()) if positive.size else 0.0
    mean_d = float(dists.mean())
    lo = max(SIGMA_LO_FACTOR * mean_d, SIGMA_FLOOR)
    hi = max(SIGMA_HI_FACTOR * mean_d, SIGMA_FLOOR)
    if _smooth_sum(dists, rho, lo) >= target:
        return rho, lo, True
    if _smooth_sum(dists, rho, hi) <= target:
        return rho, hi, True
    for _ in range(BISECTION_MAX_ITERS):
        mid = 0.5 * (lo + hi)
        s = _smooth_sum(dists, rho, mid)
        if abs(s - target) < BISECTION_TOL:
            return rho, mid, False
        if s > target:
            hi = mid
        else:
            lo = mid
    return rho, 0.5 * (lo + hi), False


def calibrate_smooth_knn(g: NeighborGraph) -> Calibration:
    """Per-point (rho, sigma) such that the smoothed weights sum to log2(k)."""
    if g.k < 2:
        raise ParameterError("calibration requires k >= 2")
    n = g.n_samples
    target = np.log2(g.k)
    rho = np.empty(n)
    sigma = np.empty(n)
    clamped = np.zeros(n, dtype=bool)
    for i in range(n):
        rho[i], sigma[i], clamped[i] = calibrate_row(g.distances[i], target)
    return Calibration(rho=rho, sigma=sigma, clamped=clamped)


def membership_strengths(g: NeighborGraph, c: Calibration) -> FuzzyGraph:
    """Directed strengths w(i -> j) = exp(-max(0, d_ij - rho_i) / sigma_i)."""
    n, k = g.neighbors.shape
    shifted = np.maximum(g.distances - c.rho[:, None], 0.0)
    w = np.exp(-shifted / c.sigma[:, None])
    rows = np.repeat(np.arange(n, dtype=np.int64), k)
    cols = g.neighbors.astype(np.int64).ravel()
    return FuzzyGraph(n=n, rows=rows, cols=cols, weights=w.ravel(), symmetric=False)


def fuzzy_union(directed: FuzzyGraph) -> FuzzyGraph:
    """Symmetrize by probabilistic t-conorm: w + w' - w*w'."""
    w = directed.matrix()
    wt = w.T.tocsr()
    sym = (w + wt - w.multiply(wt)).tocoo()
    sym.sum_duplicates()
    mask = sym.data > 0
    return FuzzyGraph(
        n=directed.n,
        rows=sym.row[mask],
        cols=sym.col[mask],
        weights=np.minimum(sym.data[mask], 1.0),
        symmetric=True,
    )


def connected_components(fg: FuzzyGraph) -> np.ndarray:
    """Union-find component labels, numbered by first point appearance."""
    parent = np.arange(fg.n, dtype=np.int64)

    def find(a: int) -> int:
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    for i, j in zip(fg.rows, fg.cols):
        ri, rj = find(int(i)), find(int(j))
        if ri != rj:
            if ri < rj:
                parent[rj] = ri
            else:
                parent[ri] = rj
    labels = np.empty(fg.n, dtype=np.int64)
    mapping: dict[int, int] = {}
    for i in range(fg.n):
        r = find(i)
        if r not in mapping:
            mapping[r] = len(mapping)
        labels[i] = mapping[r]
    return labels
