"""Run management: content-addressed run directories and their records.

A run directory is a flat folder named by run_id (hash of config + input
digests) holding the persisted artifacts of one pipeline execution plus a
record.json describing stage status. Flag mutations are written atomically
(temp file + rename).
"""

from __future__ import annotations

import datetime
import hashlib
import json
import os
import shutil
import tempfile
import warnings
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import detect
from .errors import IOFailure, ParameterError
from .features import (
    DatasetManifest,
    load_features,
    load_manifest,
    save_manifest,
    trivial_manifest,
)
from .fuzzy import calibrate_smooth_knn, fuzzy_union, membership_strengths
from .knn import knn_exact
from .layout import Embedding, UmapConfig, load_embedding, save_embedding, umap_embed
from .baselines import TsneConfig, pca_project, tsne_embed

RECORD_FILE = "record.json"
FLAGS_FILE = "flags.json"


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def compute_run_id(config: dict, input_digests: list[str]) -> str:
    payload = json.dumps({"config": config, "inputs": sorted(input_digests)},
                         sort_keys=True, default=str)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass
class RunRecord:
    run_id: str
    created_at: str
    config: dict
    stage_status: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)

    @classmethod
    def new(cls, run_id: str, config: dict) -> "RunRecord":
        return cls(
            run_id=run_id,
            created_at=datetime.datetime.now(datetime.timezone.utc).isoformat(),
            config=config,
        )

    def save(self, run_dir) -> None:
        atomic_write_json(Path(run_dir) / RECORD_FILE, asdict(self))

    @classmethod
    def load(cls, run_dir) -> "RunRecord":
        path = Path(run_dir) / RECORD_FILE
        if not path.exists():
            raise IOFailure(f"no run record at {path}")
        return cls(**json.loads(path.read_text()))


def atomic_write_json(path, payload) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def list_runs(run_root) -> list[RunRecord]:
    run_root = Path(run_root)
    records = []
    if not run_root.exists():
        return records
    for child in sorted(run_root.iterdir()):
        if (child / RECORD_FILE).exists():
            records.append(RunRecord.load(child))
    return records


def _load_inputs(features_path, manifest_path):
    features = load_features(features_path)
    if manifest_path is not None:
        manifest = load_manifest(manifest_path)
        manifest.check_alignment(features)
    else:
        manifest = trivial_manifest(features.ids)
    return features, manifest


def run_embed(
    features_path,
    manifest_path,
    run_root,
    method: str = "umap",
    umap_cfg: UmapConfig | None = None,
    tsne_cfg: TsneConfig | None = None,
) -> tuple[RunRecord, Path]:
    """Execute the embedding pipeline and persist it as a run directory.

    Returns the record and the run directory path. A finished identical run
    is reused rather than recomputed.
    """
    if method not in ("umap", "tsne", "pca"):
        raise ParameterError(f"unknown method {method!r}")
    features, manifest = _load_inputs(features_path, manifest_path)

    if method == "umap":
        umap_cfg = umap_cfg or UmapConfig(k=15)
        config = {"method": "umap", **umap_cfg.__dict__}
    elif method == "tsne":
        tsne_cfg = tsne_cfg or TsneConfig()
        config = {"method": "tsne", **tsne_cfg.__dict__}
    else:
        config = {"method": "pca"}

    digests = [file_digest(features_path)]
    if manifest_path is not None:
        digests.append(file_digest(manifest_path))
    run_id = compute_run_id(config, digests)
    run_dir = Path(run_root) / run_id
    record_path = run_dir / RECORD_FILE
    if record_path.exists():
        record = RunRecord.load(run_dir)
        if record.stage_status.get("layout") == "done":
            return record, run_dir

    run_dir.mkdir(parents=True, exist_ok=True)
    record = RunRecord.new(run_id, config)
    record.stage_status = {"knn": "pending", "fuzzy": "pending", "layout": "pending"}
    record.save(run_dir)

    save_manifest(manifest, run_dir / "manifest.jsonl")
    record.artifacts["manifest"] = "manifest.jsonl"
    record.artifacts["features"] = str(Path(features_path).resolve())

    if method == "umap":
        graph = knn_exact(features, umap_cfg.k)
        record.stage_status["knn"] = "done"
        fg = fuzzy_union(membership_strengths(graph, calibrate_smooth_knn(graph)))
        record.stage_status["fuzzy"] = "done"
        embedding = umap_embed(fg, umap_cfg, features.values)
        sidecar = {"k": umap_cfg.k, "min_dist": umap_cfg.min_dist,
                   "n_epochs": umap_cfg.n_epochs}
    elif method == "tsne":
        record.stage_status["knn"] = "done"
        record.stage_status["fuzzy"] = "done"
        embedding = tsne_embed(features, tsne_cfg)
        sidecar = {"perplexity": tsne_cfg.perplexity,
                   "main_exaggeration": tsne_cfg.main_exaggeration}
    else:
        record.stage_status["knn"] = "done"
        record.stage_status["fuzzy"] = "done"
        embedding = pca_project(features)
        sidecar = {}
    save_embedding(embedding, run_dir / "embedding.emb", sidecar=sidecar)
    record.artifacts["embedding"] = "embedding.emb"
    record.stage_status["layout"] = "done"
    record.save(run_dir)
    return record, run_dir


def run_detect(
    run_dir,
    eps: float | None = None,
    min_pts: int = 5,
    main_fraction: float = 0.05,
) -> detect.ClusterReport:
    """Cluster a finished run's embedding and persist clusters.json."""
    run_dir = Path(run_dir)
    record = RunRecord.load(run_dir)
    embedding = load_embedding(run_dir / record.artifacts["embedding"])
    manifest = load_manifest(run_dir / record.artifacts["manifest"])
    if eps is None:
        eps = detect.auto_eps(embedding, min_pts)
    labels = detect.density_cluster(embedding, eps, min_pts)
    report = detect.classify_clusters(labels, embedding, manifest, main_fraction)
    (run_dir / "clusters.json").write_text(report.to_json())
    record.artifacts["clusters"] = "clusters.json"
    record.stage_status["detect"] = "done"
    record.config.setdefault("detect", {}).update(
        {"eps": eps, "min_pts": min_pts, "main_fraction": main_fraction})
    record.save(run_dir)
    return report


def load_flags(run_dir) -> list[dict]:
    path = Path(run_dir) / FLAGS_FILE
    if not path.exists():
        return []
    return json.loads(path.read_text())


def add_flag(run_dir, cluster_id: int, flag_type: str, note: str = "") -> dict:
    flags = load_flags(run_dir)
    flag_id = max((f["flag_id"] for f in flags), default=0) + 1
    flag = {"flag_id": flag_id, "cluster_id": cluster_id,
            "flag_type": flag_type, "note": note}
    flags.append(flag)
    atomic_write_json(Path(run_dir) / FLAGS_FILE, flags)
    return flag


def delete_flag(run_dir, flag_id: int) -> bool:
    flags = load_flags(run_dir)
    remaining = [f for f in flags if f["flag_id"] != flag_id]
    if len(remaining) == len(flags):
        return False
    atomic_write_json(Path(run_dir) / FLAGS_FILE, remaining)
    return True


def export_outliers(run_dir) -> list[dict]:
    """Outlier manifest (JSON-lines rows) from the run's flags."""
    run_dir = Path(run_dir)
    record = RunRecord.load(run_dir)
    if "clusters" not in record.artifacts:
        raise ParameterError("run has no cluster report; run detect first")
    report = detect.ClusterReport.from_json(
        (run_dir / record.artifacts["clusters"]).read_text())
    manifest = load_manifest(run_dir / record.artifacts["manifest"])
    rows = []
    for flag in load_flags(run_dir):
        rows.extend(detect.outlier_manifest(
            report, [flag["cluster_id"]], flag["flag_type"], manifest))
    rows.sort(key=lambda r: (r["id"], r["flag_type"]))
    return rows
