"""k-nearest-neighbor graphs over feature rows.

Exact construction does chunked brute force; the approximate path is
NN-descent (neighbor-of-neighbor exploration from a random start). Ties at
equal distance always break toward the lower row index so both paths are
deterministic.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from .errors import FormatError, IOFailure, ParameterError, ValidationError
from .features import FeatureMatrix

KNN_MAGIC = b"KNNGRPH1"
KNN_VERSION = 1

METRICS = ("euclidean", "cosine")


@dataclass(frozen=True)
class NeighborGraph:
    k: int
    neighbors: np.ndarray  # (n, k) int32
    distances: np.ndarray  # (n, k) float64, ascending per row
    metric: str

    def __post_init__(self):
        nbr = np.ascontiguousarray(self.neighbors, dtype=np.int32)
        dst = np.ascontiguousarray(self.distances, dtype=np.float64)
        object.__setattr__(self, "neighbors", nbr)
        object.__setattr__(self, "distances", dst)
        n = nbr.shape[0]
        if nbr.shape != dst.shape or nbr.shape[1] != self.k:
            raise ValidationError("neighbor/distance shape mismatch")
        if self.metric not in METRICS:
            raise ParameterError(f"unknown metric {self.metric!r}")
        if not np.isfinite(dst).all() or (dst < 0).any():
            raise ValidationError("distances must be finite and non-negative")
        if (np.diff(dst, axis=1) < 0).any():
            raise ValidationError("per-row distances must be ascending")
        if (nbr < 0).any() or (nbr >= n).any():
            raise ValidationError("neighbor index out of range")
        if (nbr == np.arange(n)[:, None]).any():
            raise ValidationError("a row lists itself as a neighbor")

    @property
    def n_samples(self) -> int:
        return self.neighbors.shape[0]


def _pairwise_block(x: np.ndarray, block: np.ndarray, metric: str) -> np.ndarray:
    """Distances from each row of `block` to every row of `x` (float64)."""
    if metric == "euclidean":
        sq = (
            (block ** 2).sum(axis=1)[:, None]
            + (x ** 2).sum(axis=1)[None, :]
            - 2.0 * block @ x.T
        )
        np.maximum(sq, 0.0, out=sq)
        return np.sqrt(sq)
    # cosine distance; zero vectors get similarity 0
    xn = np.linalg.norm(x, axis=1)
    bn = np.linalg.norm(block, axis=1)
    denom = np.outer(bn, xn)
    sim = np.divide(block @ x.T, denom, out=np.zeros((block.shape[0], x.shape[0])),
                    where=denom > 0)
    np.clip(sim, -1.0, 1.0, out=sim)
    return 1.0 - sim


def knn_exact(
    m: FeatureMatrix, k: int, metric: str = "euclidean", chunk: int = 512
) -> NeighborGraph:
    """Exact kNN by chunked brute force; O(n^2 d) time, O(chunk*n) memory."""
    n = m.n_samples
    if not 1 <= k < n:
        raise ParameterError(f"k must satisfy 1 <= k < n_samples; got k={k}, n={n}")
    if metric not in METRICS:
        raise ParameterError(f"unknown metric {metric!r}")
    x = m.values.astype(np.float64)
    neighbors = np.empty((n, k), dtype=np.int32)
    distances = np.empty((n, k), dtype=np.float64)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        d = _pairwise_block(x, x[start:stop], metric)
        rows = np.arange(start, stop)
        d[np.arange(stop - start), rows] = np.inf
        # stable sort keeps lower indices first among exact ties
        order = np.argsort(d, axis=1, kind="stable")[:, :k]
        neighbors[start:stop] = order
        distances[start:stop] = np.take_along_axis(d, order, axis=1)
    return NeighborGraph(k=k, neighbors=neighbors, distances=distances, metric=metric)


@njit(cache=True)
def _row_distance(x, i, j, metric_code):
    if metric_code == 0:
        s = 0.0
        for t in range(x.shape[1]):
            diff = x[i, t] - x[j, t]
            s += diff * diff
        return np.sqrt(s)
    dot = 0.0
    ni = 0.0
    nj = 0.0
    for t in range(x.shape[1]):
        dot += x[i, t] * x[j, t]
        ni += x[i, t] * x[i, t]
        nj += x[j, t] * x[j, t]
    if ni == 0.0 or nj == 0.0:
        return 1.0
    c = dot / np.sqrt(ni * nj)
    if c > 1.0:
        c = 1.0
    elif c < -1.0:
        c = -1.0
    return 1.0 - c


@njit(cache=True)
def _heap_push(idx_row, dist_row, j, d):
    """Insert candidate j into a sorted (ascending) fixed-size row.

    Ties at equal distance keep the lower index first. Returns 1 if the row
    changed.
    """
    k = idx_row.shape[0]
    if d > dist_row[k - 1]:
        return 0
    if d == dist_row[k - 1] and j >= idx_row[k - 1] and idx_row[k - 1] >= 0:
        return 0
    for t in range(k):
        if idx_row[t] == j:
            return 0
    # find insertion point: after all entries strictly closer, and after
    # equal-distance entries with a lower index
    pos = k - 1
    while pos > 0:
        if dist_row[pos - 1] > d or (dist_row[pos - 1] == d and idx_row[pos - 1] > j):
            pos -= 1
        else:
            break
    for t in range(k - 1, pos, -1):
        idx_row[t] = idx_row[t - 1]
        dist_row[t] = dist_row[t - 1]
    idx_row[pos] = j
    dist_row[pos] = d
    return 1


@njit(cache=True)
def _nn_descent(x, k, seed, max_iters, metric_code, max_candidates):
    n = x.shape[0]
    np.random.seed(seed)
    idx = np.full((n, k), -1, dtype=np.int64)
    dist = np.full((n, k), np.inf, dtype=np.float64)
    # random initialization without self or duplicates
    for i in range(n):
        filled = 0
        while filled < k:
            j = np.random.randint(0, n)
            if j == i:
                continue
            dup = False
            for t in range(filled):
                if idx[i, t] == j:
                    dup = True
                    break
            if dup:
                continue
            _heap_push(idx[i], dist[i], j, _row_distance(x, i, j, metric_code))
            filled += 1

    isnew = np.ones((n, k), dtype=np.bool_)
    for _ in range(max_iters):
        # candidate lists: forward and reverse neighbors, split new/old
        new_cand = np.full((n, max_candidates), -1, dtype=np.int64)
        old_cand = np.full((n, max_candidates), -1, dtype=np.int64)
        new_cnt = np.zeros(n, dtype=np.int64)
        old_cnt = np.zeros(n, dtype=np.int64)
        for i in range(n):
            for t in range(k):
                j = idx[i, t]
                if isnew[i, t]:
                    if new_cnt[i] < max_candidates:
                        new_cand[i, new_cnt[i]] = j
                        new_cnt[i] += 1
                    if new_cnt[j] < max_candidates:
                        new_cand[j, new_cnt[j]] = i
                        new_cnt[j] += 1
                else:
                    if old_cnt[i] < max_candidates:
                        old_cand[i, old_cnt[i]] = j
                        old_cnt[i] += 1
                    if old_cnt[j] < max_candidates:
                        old_cand[j, old_cnt[j]] = i
                        old_cnt[j] += 1
        isnew[:, :] = False

        updates = 0
        for v in range(n):
            for a in range(new_cnt[v]):
                p = new_cand[v, a]
                for b_ in range(a + 1, new_cnt[v]):
                    q = new_cand[v, b_]
                    if p == q:
                        continue
                    d = _row_distance(x, p, q, metric_code)
                    u1 = _heap_push(idx[p], dist[p], q, d)
                    u2 = _heap_push(idx[q], dist[q], p, d)
                    if u1:
                        for t in range(k):
                            if idx[p, t] == q:
                                isnew[p, t] = True
                    if u2:
                        for t in range(k):
                            if idx[q, t] == p:
                                isnew[q, t] = True
                    updates += u1 + u2
                for b_ in range(old_cnt[v]):
                    q = old_cand[v, b_]
                    if p == q:
                        continue
                    d = _row_distance(x, p, q, metric_code)
                    u1 = _heap_push(idx[p], dist[p], q, d)
                    u2 = _heap_push(idx[q], dist[q], p, d)
                    if u1:
                        for t in range(k):
                            if idx[p, t] == q:
                                isnew[p, t] = True
                    if u2:
                        for t in range(k):
                            if idx[q, t] == p:
                                isnew[q, t] = True
                    updates += u1 + u2
        if updates < 0.001 * n * k:
            break
    return idx, dist


def knn_descent(
    m: FeatureMatrix,
    k: int,
    metric: str = "euclidean",
    rng_seed: int = 0,
    max_iters: int = 12,
    max_candidates: int = 60,
) -> NeighborGraph:
    """Approximate kNN by NN-descent; deterministic for a fixed seed."""
    n = m.n_samples
    if not 1 <= k < n:
        raise ParameterError(f"k must satisfy 1 <= k < n_samples; got k={k}, n={n}")
    if metric not in METRICS:
        raise ParameterError(f"unknown metric {metric!r}")
    metric_code = METRICS.index(metric)
    x = m.values.astype(np.float64)
    idx, dist = _nn_descent(x, k, rng_seed, max_iters, metric_code, max_candidates)
    return NeighborGraph(
        k=k,
        neighbors=idx.astype(np.int32),
        distances=dist,
        metric=metric,
    )


def knn_recall(approx: NeighborGraph, exact: NeighborGraph) -> float:
    """Mean per-row overlap |approx ∩ exact| / k."""
    if approx.neighbors.shape != exact.neighbors.shape:
        raise ParameterError(
            f"shape mismatch: {approx.neighbors.shape} vs {exact.neighbors.shape}"
        )
    hits = 0
    for a_row, e_row in zip(approx.neighbors, exact.neighbors):
        hits += len(set(a_row.tolist()) & set(e_row.tolist()))
    return hits / exact.neighbors.size


def save_graph(g: NeighborGraph, path) -> None:
    """Cache a NeighborGraph in the KNNGRPH1 binary layout."""
    path = Path(path)
    try:
        with open(path, "wb") as fh:
            fh.write(KNN_MAGIC)
            fh.write(struct.pack("<I", KNN_VERSION))
            fh.write(struct.pack("<QQ", g.n_samples, g.k))
            tag = g.metric.encode("utf-8")
            fh.write(struct.pack("<H", len(tag)))
            fh.write(tag)
            fh.write(np.ascontiguousarray(g.neighbors, dtype="<u4").tobytes())
            fh.write(np.ascontiguousarray(g.distances, dtype="<f4").tobytes())
    except OSError as exc:
        raise IOFailure(f"cannot write graph cache {path}: {exc}") from exc


def load_graph(path) -> NeighborGraph:
    path = Path(path)
    if not path.exists():
        raise IOFailure(f"graph cache not found: {path}")
    with open(path, "rb") as fh:
        if fh.read(8) != KNN_MAGIC:
            raise FormatError(f"{path}: bad magic")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != KNN_VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        n, k = struct.unpack("<QQ", fh.read(16))
        (taglen,) = struct.unpack("<H", fh.read(2))
        metric = fh.read(taglen).decode("utf-8")
        nbr = np.frombuffer(fh.read(n * k * 4), dtype="<u4").reshape(n, k)
        dst = np.frombuffer(fh.read(n * k * 4), dtype="<f4").reshape(n, k)
    return NeighborGraph(
        k=int(k),
        neighbors=nbr.astype(np.int32),
        distances=dst.astype(np.float64),
        metric=metric,
    )
