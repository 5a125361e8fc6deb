"""Satellite-cluster detection on a 2-D embedding.

DBSCAN partitions the embedding into density clusters; clusters above a
size threshold (fraction of n) are "main", the rest are "satellite", and
unclustered points are noise. Each cluster is summarized against the
manifest (dominant view label, dominant patient) so small single-patient or
single-artifact clusters stand out.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, asdict
from typing import Optional, Sequence

import numpy as np

from .errors import ParameterError, ValidationError
from .features import DatasetManifest
from .layout import Embedding

EPS_FLOOR = 1e-12


def _pairwise_sq(coords: np.ndarray) -> np.ndarray:
    sq = (coords ** 2).sum(axis=1)
    d = sq[:, None] + sq[None, :] - 2.0 * (coords @ coords.T)
    np.maximum(d, 0.0, out=d)
    return d


def density_cluster(e: Embedding, eps: float, min_pts: int) -> np.ndarray:
    """DBSCAN labels (-1 = noise).

    A point is core when at least min_pts points (itself included) lie
    within eps. Clusters are the density-connected classes of core points,
    numbered by their smallest core index; border points join the adjacent
    core cluster with the lowest id.
    """
    if eps <= 0:
        raise ParameterError("eps must be positive")
    if min_pts < 2:
        raise ParameterError("min_pts must be >= 2")
    coords = e.coords.astype(np.float64)
    n = coords.shape[0]
    eps_sq = eps * eps

    # neighbor lists via chunked pairwise distances
    neighbor_lists: list[np.ndarray] = []
    chunk = max(1, min(n, 2048))
    for start in range(0, n, chunk):
        d = (
            (coords[start:start + chunk] ** 2).sum(axis=1)[:, None]
            + (coords ** 2).sum(axis=1)[None, :]
            - 2.0 * coords[start:start + chunk] @ coords.T
        )
        for r in range(d.shape[0]):
            neighbor_lists.append(np.nonzero(d[r] <= eps_sq)[0])
    is_core = np.array([len(nb) >= min_pts for nb in neighbor_lists])

    # union-find over core-core edges
    parent = np.arange(n)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in np.nonzero(is_core)[0]:
        for j in neighbor_lists[i]:
            if is_core[j]:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    labels = np.full(n, -1, dtype=np.int64)
    root_to_label: dict[int, int] = {}
    for i in np.nonzero(is_core)[0]:
        r = find(i)
        if r not in root_to_label:
            root_to_label[r] = len(root_to_label)
        labels[i] = root_to_label[r]
    # border points: lowest adjacent core-cluster id wins
    for i in np.nonzero(~is_core)[0]:
        adjacent = [labels[j] for j in neighbor_lists[i] if is_core[j]]
        if adjacent:
            labels[i] = min(adjacent)
    return labels


def auto_eps(e: Embedding, min_pts: int) -> float:
    """Knee of the sorted min_pts-th nearest-neighbor distance curve
    (farthest point from the chord)."""
    coords = e.coords.astype(np.float64)
    n = coords.shape[0]
    if n <= min_pts:
        raise ParameterError(f"need n > min_pts; got n={n}, min_pts={min_pts}")
    d = np.sqrt(_pairwise_sq(coords))
    np.fill_diagonal(d, np.inf)
    kdist = np.sort(np.partition(d, min_pts - 1, axis=1)[:, min_pts - 1])
    if kdist[-1] - kdist[0] < 1e-15:
        return max(float(kdist[0]), EPS_FLOOR)
    xs = np.arange(n, dtype=np.float64)
    x0, y0 = 0.0, kdist[0]
    x1, y1 = float(n - 1), kdist[-1]
    # distance from each curve point to the chord
    norm = np.hypot(x1 - x0, y1 - y0)
    dist = np.abs((y1 - y0) * xs - (x1 - x0) * kdist + x1 * y0 - y1 * x0) / norm
    knee = int(np.argmax(dist))
    return max(float(kdist[knee]), EPS_FLOOR)


@dataclass(frozen=True)
class ClusterSummary:
    id: int
    size: int
    centroid: tuple[float, float]
    kind: str  # main | satellite | noise
    dominant_view: tuple[Optional[str], float]
    dominant_patient: tuple[Optional[str], float]
    separation: float
    member_ids: tuple[str, ...]


@dataclass(frozen=True)
class ClusterReport:
    labels: np.ndarray
    clusters: tuple[ClusterSummary, ...]
    ids: tuple[str, ...]
    main_fraction: float

    def cluster(self, cluster_id: int) -> ClusterSummary:
        for c in self.clusters:
            if c.id == cluster_id:
                return c
        raise ParameterError(f"unknown cluster id {cluster_id}")

    def to_json(self) -> str:
        payload = {
            "main_fraction": self.main_fraction,
            "labels": self.labels.tolist(),
            "ids": list(self.ids),
            "clusters": [asdict(c) for c in self.clusters],
        }
        return json.dumps(payload, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ClusterReport":
        payload = json.loads(text)
        clusters = tuple(
            ClusterSummary(
                id=c["id"], size=c["size"], centroid=tuple(c["centroid"]),
                kind=c["kind"],
                dominant_view=tuple(c["dominant_view"]),
                dominant_patient=tuple(c["dominant_patient"]),
                separation=c["separation"],
                member_ids=tuple(c["member_ids"]),
            )
            for c in payload["clusters"]
        )
        return cls(
            labels=np.asarray(payload["labels"], dtype=np.int64),
            clusters=clusters,
            ids=tuple(payload["ids"]),
            main_fraction=payload["main_fraction"],
        )


def _dominant(values: Sequence[Optional[str]]) -> tuple[Optional[str], float]:
    present = [v for v in values if v is not None]
    if not present:
        return None, 0.0
    counts: dict[str, int] = {}
    for v in present:
        counts[v] = counts.get(v, 0) + 1
    best = max(sorted(counts), key=lambda k: counts[k])
    return best, counts[best] / len(values)


def classify_clusters(
    labels: np.ndarray,
    e: Embedding,
    manifest: DatasetManifest,
    main_fraction: float = 0.05,
) -> ClusterReport:
    """Split clusters into main (size >= main_fraction * n) and satellite,
    annotate with metadata concentrations, and measure each satellite's
    separation from the nearest main cluster."""
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.shape[0]
    if e.n_samples != n or len(manifest) != n:
        raise ValidationError("labels, embedding, and manifest sizes disagree")
    coords = e.coords.astype(np.float64)
    ids = manifest.ids
    cluster_ids = sorted(set(labels.tolist()) - {-1})
    if not cluster_ids:
        warnings.warn("clustering produced only noise; empty report")

    main_members = np.zeros(n, dtype=bool)
    sizes = {cid: int((labels == cid).sum()) for cid in cluster_ids}
    for cid in cluster_ids:
        if sizes[cid] >= main_fraction * n:
            main_members |= labels == cid

    def summarize(cid: int, kind: str, members: np.ndarray) -> ClusterSummary:
        sub = coords[members]
        view, view_frac = _dominant([manifest.entries[i].view_label
                                     for i in np.nonzero(members)[0]])
        patient, patient_frac = _dominant([manifest.entries[i].patient_id
                                           for i in np.nonzero(members)[0]])
        if kind == "satellite" and main_members.any():
            diffs = sub[:, None, :] - coords[main_members][None, :, :]
            separation = float(np.sqrt((diffs ** 2).sum(axis=2)).min())
        elif kind == "satellite":
            separation = float("inf")
        else:
            separation = 0.0
        return ClusterSummary(
            id=cid, size=int(members.sum()),
            centroid=tuple(float(v) for v in sub.mean(axis=0)),
            kind=kind,
            dominant_view=(view, view_frac),
            dominant_patient=(patient, patient_frac),
            separation=separation,
            member_ids=tuple(ids[i] for i in np.nonzero(members)[0]),
        )

    mains = []
    satellites = []
    for cid in cluster_ids:
        members = labels == cid
        kind = "main" if sizes[cid] >= main_fraction * n else "satellite"
        summary = summarize(cid, kind, members)
        (mains if kind == "main" else satellites).append(summary)
    satellites.sort(key=lambda c: -c.size)
    clusters = list(mains) + satellites
    noise = labels == -1
    if noise.any():
        clusters.append(summarize(-1, "noise", noise))
    return ClusterReport(labels=labels, clusters=tuple(clusters), ids=tuple(ids),
                         main_fraction=main_fraction)


def outlier_manifest(
    report: ClusterReport,
    selected_cluster_ids: Sequence[int],
    flag_type: str,
    manifest: DatasetManifest | None = None,
) -> list[dict]:
    """Flat outlier list for the members of the selected clusters, ordered
    by sample id."""
    paths = {e.id: e.image_path for e in manifest.entries} if manifest else {}
    out = []
    for cid in sorted(set(selected_cluster_ids)):
        cluster = report.cluster(cid)
        for sid in cluster.member_ids:
            out.append({
                "id": sid,
                "cluster_id": cid,
                "flag_type": flag_type,
                "image_path": paths.get(sid),
            })
    out.sort(key=lambda r: r["id"])
    return out
