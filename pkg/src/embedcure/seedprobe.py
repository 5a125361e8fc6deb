"""Seed-probe mislabel search.

Reference-labeled seed points are merged into a target set, the joint set
is re-embedded, and each target point is scored by the fraction of seeds
among its nearest embedding neighbors. Points majority-surrounded by seeds
are flagged as probable mislabels.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from . import detect
from .errors import ParameterError, StageError
from .features import (
    DatasetManifest,
    FeatureMatrix,
    merge_datasets,
    save_features,
    save_manifest,
)
from .fuzzy import calibrate_smooth_knn, fuzzy_union, membership_strengths
from .knn import knn_exact
from .layout import Embedding, UmapConfig, save_embedding, umap_embed


@dataclass(frozen=True)
class ProbeConfig:
    k_vote: int = 10
    vote_threshold: float = 0.5
    seed_label: str = "seed"


@dataclass(frozen=True)
class FlaggedPoint:
    id: str
    seed_vote_fraction: float
    cluster_id: int


@dataclass(frozen=True)
class SeedProbeResult:
    flagged: tuple[FlaggedPoint, ...]
    config: ProbeConfig

    def to_json(self) -> str:
        return json.dumps({
            "config": asdict(self.config),
            "flagged": [asdict(f) for f in self.flagged],
        }, indent=2)


def probe_mislabels(
    e: Embedding,
    manifest: DatasetManifest,
    k_vote: int = 10,
    vote_threshold: float = 0.5,
    seed_label: str = "seed",
) -> SeedProbeResult:
    """Score non-seed points by seed fraction among k_vote nearest embedding
    neighbors; flag those at or above vote_threshold."""
    n = e.n_samples
    if len(manifest) != n:
        raise ParameterError("embedding and manifest sizes disagree")
    if k_vote >= n:
        raise ParameterError(f"k_vote={k_vote} must be < n={n}")
    is_seed = np.array([entry.is_seed for entry in manifest.entries])
    if not is_seed.any():
        raise ParameterError("manifest contains no seed points")
    if is_seed.all():
        raise ParameterError("manifest contains no non-seed points")

    coords = e.coords.astype(np.float64)
    # cluster ids for context in the report
    try:
        labels = detect.density_cluster(e, detect.auto_eps(e, min_pts=5), min_pts=5)
    except ParameterError:
        labels = np.full(n, -1, dtype=np.int64)

    flagged = []
    sq = (coords ** 2).sum(axis=1)
    for i in np.nonzero(~is_seed)[0]:
        d = sq + sq[i] - 2.0 * (coords @ coords[i])
        d[i] = np.inf
        nearest = np.argpartition(d, k_vote)[:k_vote]
        fraction = float(is_seed[nearest].sum()) / k_vote
        if fraction >= vote_threshold:
            flagged.append(FlaggedPoint(
                id=manifest.entries[i].id,
                seed_vote_fraction=fraction,
                cluster_id=int(labels[i]),
            ))
    flagged.sort(key=lambda f: (-f.seed_vote_fraction, f.id))
    return SeedProbeResult(
        flagged=tuple(flagged),
        config=ProbeConfig(k_vote=k_vote, vote_threshold=vote_threshold,
                           seed_label=seed_label),
    )


def run_seed_probe(
    target: FeatureMatrix,
    target_manifest: DatasetManifest,
    seeds: FeatureMatrix,
    seed_manifest: DatasetManifest,
    embed_cfg: UmapConfig,
    probe_cfg: ProbeConfig = ProbeConfig(),
    run_dir=None,
) -> SeedProbeResult:
    """Full pipeline: merge -> kNN -> fuzzy graph -> layout -> neighbor vote.

    When run_dir is given, intermediate artifacts (config, merged features
    and manifest, embedding, probe result) are persisted there.
    """
    if target.n_samples == 0:
        raise ParameterError("target set is empty")
    target_sources = {e.source for e in target_manifest.entries}
    seed_sources = {e.source for e in seed_manifest.entries}
    if target_sources & seed_sources:
        warnings.warn(
            "seed and target share source tags; seeds from a different "
            "dataset give a cleaner probe"
        )

    def stage(name, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except Exception as exc:
            if isinstance(exc, StageError):
                raise
            raise StageError(name, exc) from exc

    merged, merged_manifest = stage(
        "merge", merge_datasets, target, target_manifest, seeds, seed_manifest,
        probe_cfg.seed_label,
    )
    graph = stage("knn", knn_exact, merged, embed_cfg.k)
    calibration = stage("calibrate", calibrate_smooth_knn, graph)
    directed = stage("membership", membership_strengths, graph, calibration)
    fg = stage("fuzzy_union", fuzzy_union, directed)
    embedding = stage("layout", umap_embed, fg, embed_cfg, merged.values)
    result = stage(
        "probe", probe_mislabels, embedding, merged_manifest,
        probe_cfg.k_vote, probe_cfg.vote_threshold, probe_cfg.seed_label,
    )

    if run_dir is not None:
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "config.json").write_text(json.dumps({
            "embed": embed_cfg.__dict__, "probe": asdict(probe_cfg),
        }, indent=2, sort_keys=True))
        save_features(merged, run_dir / "merged.featmat")
        save_manifest(merged_manifest, run_dir / "merged.manifest.jsonl")
        save_embedding(embedding, run_dir / "embedding.emb", sidecar={
            "k": embed_cfg.k, "min_dist": embed_cfg.min_dist,
            "n_epochs": embed_cfg.n_epochs,
        })
        (run_dir / "probe_result.json").write_text(result.to_json())
    return result
