"""2-D layout optimization of a fuzzy graph.

The output similarity curve phi(x) = 1 / (1 + a x^(2b)) is fitted from
(min_dist, spread); coordinates start from a spectral (default), random, or
PCA initialization and are refined by epoch-based stochastic gradient
descent with negative sampling.

Embedding file layout ("EMBED2D1"):
    magic (8 bytes) | n u64 LE | coords as binary32 (x, y) pairs |
    config-hash string (u16 LE length + UTF-8). A JSON sidecar
    <path>.json records {method, k, min_dist, n_epochs, rng_seed}.
"""

from __future__ import annotations

import hashlib
import json
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.optimize
from numba import njit

from .errors import FormatError, IOFailure, NumericError, ParameterError, ValidationError
from .fuzzy import FuzzyGraph, connected_components

EMB_MAGIC = b"EMBED2D1"

CLIP = 4.0
REPULSION_DIST_FLOOR = 1e-3
INIT_SCALE = 10.0
COMPONENT_GRID_SPACING = 30.0


@dataclass(frozen=True)
class UmapConfig:
    k: int
    min_dist: float = 0.1
    spread: float = 1.0
    n_epochs: int = 200
    learning_rate: float = 1.0
    negative_sample_rate: int = 5
    init: str = "spectral"
    rng_seed: int = 0

    def __post_init__(self):
        if not 0 < self.min_dist < self.spread:
            raise ParameterError(
                f"require 0 < min_dist < spread; got {self.min_dist}, {self.spread}"
            )
        if self.n_epochs < 1:
            raise ParameterError("n_epochs must be >= 1")
        if self.negative_sample_rate < 1:
            raise ParameterError("negative_sample_rate must be >= 1")
        if self.init not in ("spectral", "random", "pca"):
            raise ParameterError(f"unknown init {self.init!r}")
        if self.learning_rate <= 0:
            raise ParameterError("learning_rate must be positive")

    def hash(self, method: str = "umap") -> str:
        payload = json.dumps(
            {"method": method, **self.__dict__}, sort_keys=True, default=str
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Embedding:
    coords: np.ndarray  # (n, 2) float32
    method: str
    config_hash: str
    rng_seed: int

    def __post_init__(self):
        c = np.ascontiguousarray(self.coords, dtype=np.float32)
        object.__setattr__(self, "coords", c)
        if c.ndim != 2 or c.shape[1] != 2:
            raise ValidationError(f"coords must be (n, 2), got {c.shape}")
        if not np.isfinite(c).all():
            raise ValidationError("embedding coordinates must be finite")

    @property
    def n_samples(self) -> int:
        return self.coords.shape[0]


def output_curve(x, a: float, b: float):
    return 1.0 / (1.0 + a * np.power(x, 2.0 * b))


def fit_ab(min_dist: float, spread: float, n_points: int = 300) -> tuple[float, float]:
    """Least-squares fit of phi to the desired falloff curve.

    The target is 1 for x <= min_dist then exp(-(x - min_dist)/spread),
    sampled at n_points on [0, 3*spread].
    """
    if not 0 < min_dist < spread:
        raise ParameterError(f"require 0 < min_dist < spread; got {min_dist}, {spread}")
    xs = np.linspace(0.0, 3.0 * spread, n_points)
    ys = np.where(xs <= min_dist, 1.0, np.exp(-(xs - min_dist) / spread))
    try:
        (a, b), _ = scipy.optimize.curve_fit(output_curve, xs, ys, p0=(1.0, 1.0),
                                             maxfev=10000)
    except RuntimeError as exc:
        raise NumericError(f"output-curve fit did not converge: {exc}") from exc
    resid = float(np.sqrt(np.mean((output_curve(xs, a, b) - ys) ** 2)))
    if not np.isfinite(resid) or resid > 0.1:
        raise NumericError(f"output-curve fit residual too large: {resid}")
    return float(a), float(b)


def attractive_grad_coeff(d: np.ndarray, a: float, b: float):
    """d/dd of log phi(d), divided by d (per-coordinate coefficient)."""
    d2b = a * np.power(np.maximum(d, 1e-12), 2.0 * b)
    return -2.0 * b * d2b / (np.maximum(d, 1e-12) ** 2 * (1.0 + d2b))


def repulsive_grad_coeff(d: np.ndarray, a: float, b: float):
    """d/dd of log(1 - phi(d)), divided by d, with the distance floor."""
    dsq = np.asarray(d, dtype=float) ** 2
    return 2.0 * b / ((REPULSION_DIST_FLOOR + dsq) * (1.0 + a * np.power(dsq, b)))


# ---------------------------------------------------------------------------
# initialization


def _power_iteration_eigvecs(mat_mul, n: int, n_vecs: int, known: list[np.ndarray],
                             seed: int, iters: int = 1000, tol: float = 1e-10):
    """Top eigenvectors of a symmetric PSD operator by power iteration with
    deflation against `known` (already-normalized) eigenvectors."""
    rng = np.random.RandomState(seed)
    found: list[np.ndarray] = []
    for _ in range(n_vecs):
        v = rng.normal(size=n)
        basis = known + found
        for _ in range(iters):
            for u in basis:
                v -= np.dot(u, v) * u
            w = mat_mul(v)
            for u in basis:
                w -= np.dot(u, w) * u
            norm = np.linalg.norm(w)
            if norm < 1e-14:
                w = rng.normal(size=n)
                norm = np.linalg.norm(w)
            w /= norm
            if np.linalg.norm(w - v) < tol or np.linalg.norm(w + v) < tol:
                v = w
                break
            v = w
        found.append(v)
    return found


def _spectral_component(w_csr, seed: int) -> np.ndarray:
    """2-D spectral coordinates of a connected weighted graph."""
    n = w_csr.shape[0]
    if n == 1:
        return np.zeros((1, 2))
    if n == 2:
        return np.array([[-1.0, 0.0], [1.0, 0.0]])
    deg = np.asarray(w_csr.sum(axis=1)).ravel()
    deg = np.maximum(deg, 1e-12)
    d_inv_sqrt = 1.0 / np.sqrt(deg)
    # operator 2I - L_sym; its top eigenvector is d^(1/2)
    def mat_mul(v):
        return v + d_inv_sqrt * (w_csr @ (d_inv_sqrt * v))

    u0 = np.sqrt(deg)
    u0 /= np.linalg.norm(u0)
    vecs = _power_iteration_eigvecs(mat_mul, n, 2, [u0], seed)
    return np.column_stack(vecs)


def _scale_to_box(coords: np.ndarray, half_width: float) -> np.ndarray:
    c = coords - coords.mean(axis=0, keepdims=True)
    extent = np.abs(c).max()
    if extent < 1e-12:
        return c
    return c * (half_width / extent)


def spectral_init(fg: FuzzyGraph, seed: int) -> np.ndarray:
    """Spectral coordinates; disconnected graphs fall back to per-component
    layouts placed on a grid of offsets."""
    labels = connected_components(fg)
    n_comp = labels.max() + 1
    w = fg.matrix()
    if n_comp == 1:
        return _scale_to_box(_spectral_component(w, seed), INIT_SCALE)
    warnings.warn(
        f"graph has {n_comp} connected components; using per-component "
        "spectral layout with grid offsets"
    )
    coords = np.zeros((fg.n, 2))
    grid = int(np.ceil(np.sqrt(n_comp)))
    for comp in range(n_comp):
        members = np.nonzero(labels == comp)[0]
        sub = w[members][:, members]
        local = _spectral_component(sub.tocsr(), seed + comp)
        half = max(INIT_SCALE * np.sqrt(len(members) / fg.n), 1.0)
        local = _scale_to_box(local, half)
        offset = np.array([
            (comp % grid) * COMPONENT_GRID_SPACING,
            (comp // grid) * COMPONENT_GRID_SPACING,
        ])
        coords[members] = local + offset
    return coords


def pca_init(features: np.ndarray) -> np.ndarray:
    from .baselines import principal_directions

    x = np.asarray(features, dtype=np.float64)
    centered = x - x.mean(axis=0, keepdims=True)
    dirs, _ = principal_directions(centered, 2)
    return centered @ dirs.T


def init_embedding(
    fg: FuzzyGraph, cfg: UmapConfig, features: np.ndarray | None = None
) -> Embedding:
    if not fg.symmetric:
        raise ParameterError("init_embedding requires a symmetric fuzzy graph")
    if cfg.init == "random":
        rng = np.random.RandomState(cfg.rng_seed)
        coords = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(fg.n, 2))
    elif cfg.init == "pca":
        if features is None:
            raise ParameterError("pca init requires the original feature matrix")
        coords = _scale_to_box(pca_init(features), INIT_SCALE)
    else:
        coords = spectral_init(fg, cfg.rng_seed)
    return Embedding(
        coords=coords.astype(np.float32),
        method="umap-init",
        config_hash=cfg.hash(),
        rng_seed=cfg.rng_seed,
    )


# ---------------------------------------------------------------------------
# stochastic gradient descent with negative sampling


@njit(cache=True)
def _seed_rng(seed):
    np.random.seed(seed)


@njit(cache=True)
def _clip(v):
    if v > CLIP:
        return CLIP
    if v < -CLIP:
        return -CLIP
    return v


@njit(cache=True)
def _sgd_epoch(coords, heads, tails, epochs_per_sample, epoch_of_next_sample,
               epochs_per_negative, epoch_of_next_negative, a, b, alpha, epoch):
    n = coords.shape[0]
    for e in range(heads.shape[0]):
        if epoch_of_next_sample[e] > epoch:
            continue
        i = heads[e]
        j = tails[e]
        dx = coords[i, 0] - coords[j, 0]
        dy = coords[i, 1] - coords[j, 1]
        dsq = dx * dx + dy * dy
        if dsq > 0.0:
            g = (-2.0 * a * b * dsq ** (b - 1.0)) / (1.0 + a * dsq ** b)
            gx = _clip(g * dx)
            gy = _clip(g * dy)
            coords[i, 0] += alpha * gx
            coords[i, 1] += alpha * gy
            coords[j, 0] -= alpha * gx
            coords[j, 1] -= alpha * gy
        epoch_of_next_sample[e] += epochs_per_sample[e]

        n_neg = int((epoch - epoch_of_next_negative[e]) / epochs_per_negative[e])
        for _ in range(n_neg):
            t = np.random.randint(0, n)
            if t == i:
                continue
            dx = coords[i, 0] - coords[t, 0]
            dy = coords[i, 1] - coords[t, 1]
            dsq = dx * dx + dy * dy
            if dsq > 0.0:
                g = (2.0 * b) / ((REPULSION_DIST_FLOOR + dsq) * (1.0 + a * dsq ** b))
                gx = _clip(g * dx)
                gy = _clip(g * dy)
            else:
                gx = CLIP
                gy = -CLIP
            coords[i, 0] += alpha * gx
            coords[i, 1] += alpha * gy
        epoch_of_next_negative[e] += n_neg * epochs_per_negative[e]


def optimize_layout(
    fg: FuzzyGraph, init: Embedding, cfg: UmapConfig, a: float, b: float
) -> Embedding:
    """Epoch-based SGD with negative sampling over the fuzzy-graph edges.

    Edges are sampled proportionally to weight via an epochs-per-sample
    schedule; the learning rate decays linearly to zero.
    """
    if init.n_samples != fg.n:
        raise ParameterError("initial embedding size does not match graph")
    m = fg.matrix().tocoo()
    m.sum_duplicates()
    # canonical edge order for determinism
    order = np.lexsort((m.col, m.row))
    heads = m.row[order].astype(np.int64)
    tails = m.col[order].astype(np.int64)
    weights = m.data[order]
    if weights.size == 0:
        raise ParameterError("fuzzy graph has no edges")
    w_max = weights.max()
    epochs_per_sample = (w_max / weights).astype(np.float64)
    epoch_of_next_sample = epochs_per_sample.copy()
    epochs_per_negative = epochs_per_sample / cfg.negative_sample_rate
    epoch_of_next_negative = epochs_per_negative.copy()

    coords = init.coords.astype(np.float64).copy()
    _seed_rng(cfg.rng_seed)
    for epoch in range(cfg.n_epochs):
        alpha = cfg.learning_rate * (1.0 - epoch / cfg.n_epochs)
        _sgd_epoch(coords, heads, tails, epochs_per_sample, epoch_of_next_sample,
                   epochs_per_negative, epoch_of_next_negative,
                   float(a), float(b), alpha, float(epoch))
        if not np.isfinite(coords).all():
            raise NumericError(f"non-finite coordinates at epoch {epoch}")
    return Embedding(
        coords=coords.astype(np.float32),
        method="umap",
        config_hash=cfg.hash(),
        rng_seed=cfg.rng_seed,
    )


def umap_embed(
    fg: FuzzyGraph, cfg: UmapConfig, features: np.ndarray | None = None
) -> Embedding:
    """Full layout stage: curve fit, initialization, optimization."""
    a, b = fit_ab(cfg.min_dist, cfg.spread)
    init = init_embedding(fg, cfg, features=features)
    return optimize_layout(fg, init, cfg, a, b)


# ---------------------------------------------------------------------------
# embedding file format


def save_embedding(e: Embedding, path, sidecar: dict | None = None) -> None:
    path = Path(path)
    try:
        with open(path, "wb") as fh:
            fh.write(EMB_MAGIC)
            fh.write(struct.pack("<Q", e.n_samples))
            fh.write(np.ascontiguousarray(e.coords, dtype="<f4").tobytes())
            tag = e.config_hash.encode("utf-8")
            fh.write(struct.pack("<H", len(tag)))
            fh.write(tag)
        meta = {"method": e.method, "rng_seed": e.rng_seed}
        if sidecar:
            meta.update(sidecar)
        with open(str(path) + ".json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
    except OSError as exc:
        raise IOFailure(f"cannot write embedding {path}: {exc}") from exc


def load_embedding(path) -> Embedding:
    path = Path(path)
    if not path.exists():
        raise IOFailure(f"embedding file not found: {path}")
    with open(path, "rb") as fh:
        if fh.read(8) != EMB_MAGIC:
            raise FormatError(f"{path}: bad magic")
        (n,) = struct.unpack("<Q", fh.read(8))
        coords = np.frombuffer(fh.read(n * 8), dtype="<f4").reshape(n, 2)
        (taglen,) = struct.unpack("<H", fh.read(2))
        config_hash = fh.read(taglen).decode("utf-8")
    method = "unknown"
    rng_seed = 0
    sidecar = Path(str(path) + ".json")
    if sidecar.exists():
        meta = json.loads(sidecar.read_text())
        method = meta.get("method", method)
        rng_seed = int(meta.get("rng_seed", 0))
    return Embedding(coords=coords.copy(), method=method,
                     config_hash=config_hash, rng_seed=rng_seed)
