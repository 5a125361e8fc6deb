"""HTTP API for the curation UI.

All responses are JSON except the embedding payload, which is binary:
coordinates as little-endian binary32 (x, y) pairs followed by the id
block (u16 LE length + UTF-8 per id). Mutations (flags, probe launches)
are serialized through a per-run lock and flag writes are atomic.
"""

from __future__ import annotations

import io
import struct
import threading
from collections import OrderedDict
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel

from . import detect, runs
from .errors import EmbedcureError, IOFailure, ParameterError
from .features import load_features, load_manifest
from .layout import UmapConfig, load_embedding
from .seedprobe import ProbeConfig, run_seed_probe

THUMB_SIZE = 128
THUMB_CACHE_CAPACITY = 1000


class FlagRequest(BaseModel):
    cluster_id: int
    flag_type: str
    note: str = ""


class SeedProbeRequest(BaseModel):
    seed_features: str
    seed_manifest: str | None = None
    seed_label: str = "seed"
    k: int = 10
    min_dist: float = 0.1
    n_epochs: int = 200
    rng_seed: int = 0
    k_vote: int = 10
    vote_threshold: float = 0.5


class ThumbnailCache:
    """In-memory LRU of downscaled JPEG thumbnails keyed by (path, mtime)."""

    def __init__(self, capacity: int = THUMB_CACHE_CAPACITY):
        self.capacity = capacity
        self._store: OrderedDict[tuple, bytes] = OrderedDict()
        self._lock = threading.Lock()

    def get(self, path: Path) -> bytes:
        key = (str(path), path.stat().st_mtime_ns)
        with self._lock:
            if key in self._store:
                self._store.move_to_end(key)
                return self._store[key]
        data = self._render(path)
        with self._lock:
            self._store[key] = data
            self._store.move_to_end(key)
            while len(self._store) > self.capacity:
                self._store.popitem(last=False)
        return data

    @staticmethod
    def _render(path: Path) -> bytes:
        from PIL import Image

        with Image.open(path) as img:
            img = img.convert("RGB")
            img.thumbnail((THUMB_SIZE, THUMB_SIZE))
            buf = io.BytesIO()
            img.save(buf, format="JPEG")
            return buf.getvalue()


def create_app(run_root) -> FastAPI:
    run_root = Path(run_root)
    app = FastAPI(title="embedcure curation service")
    thumbs = ThumbnailCache()
    write_locks: dict[str, threading.Lock] = {}
    locks_guard = threading.Lock()

    def run_dir(run_id: str) -> Path:
        d = run_root / run_id
        if not (d / runs.RECORD_FILE).exists():
            raise HTTPException(status_code=404, detail=f"unknown run {run_id}")
        return d

    def write_lock(run_id: str) -> threading.Lock:
        with locks_guard:
            return write_locks.setdefault(run_id, threading.Lock())

    def load_report(d: Path) -> detect.ClusterReport:
        record = runs.RunRecord.load(d)
        if "clusters" not in record.artifacts:
            raise HTTPException(status_code=409, detail="run has no cluster report")
        return detect.ClusterReport.from_json(
            (d / record.artifacts["clusters"]).read_text())

    @app.get("/api/runs")
    def get_runs():
        from dataclasses import asdict
        return [asdict(r) for r in runs.list_runs(run_root)]

    @app.get("/api/runs/{run_id}")
    def get_run(run_id: str):
        from dataclasses import asdict
        return asdict(runs.RunRecord.load(run_dir(run_id)))

    @app.get("/api/runs/{run_id}/embedding")
    def get_embedding(run_id: str):
        d = run_dir(run_id)
        record = runs.RunRecord.load(d)
        embedding = load_embedding(d / record.artifacts["embedding"])
        manifest = load_manifest(d / record.artifacts["manifest"])
        buf = io.BytesIO()
        buf.write(np.ascontiguousarray(embedding.coords, dtype="<f4").tobytes())
        for sid in manifest.ids:
            raw = sid.encode("utf-8")
            buf.write(struct.pack("<H", len(raw)))
            buf.write(raw)
        return Response(content=buf.getvalue(),
                        media_type="application/octet-stream")

    @app.get("/api/runs/{run_id}/clusters")
    def get_clusters(run_id: str):
        import json
        return json.loads(load_report(run_dir(run_id)).to_json())

    @app.get("/api/runs/{run_id}/points")
    def get_points(run_id: str, cluster: int):
        d = run_dir(run_id)
        record = runs.RunRecord.load(d)
        report = load_report(d)
        embedding = load_embedding(d / record.artifacts["embedding"])
        manifest = load_manifest(d / record.artifacts["manifest"])
        members = np.nonzero(report.labels == cluster)[0]
        if members.size == 0 and cluster not in {c.id for c in report.clusters}:
            raise HTTPException(status_code=404, detail=f"unknown cluster {cluster}")
        out = []
        for i in members:
            e = manifest.entries[i]
            out.append({
                "id": e.id,
                "x": float(embedding.coords[i, 0]),
                "y": float(embedding.coords[i, 1]),
                "view_label": e.view_label,
                "patient_id": e.patient_id,
                "is_seed": e.is_seed,
                "image_path": e.image_path,
            })
        return out

    @app.get("/api/images/{sample_id}/thumb")
    def get_thumbnail(sample_id: str):
        for record in runs.list_runs(run_root):
            d = run_root / record.run_id
            manifest = load_manifest(d / record.artifacts["manifest"])
            entry = manifest.by_id().get(sample_id)
            if entry and entry.image_path:
                path = Path(entry.image_path)
                if not path.exists():
                    raise HTTPException(status_code=404,
                                        detail=f"image file missing: {path}")
                return Response(content=thumbs.get(path), media_type="image/jpeg")
        raise HTTPException(status_code=404, detail=f"unknown sample {sample_id}")

    @app.post("/api/runs/{run_id}/flags")
    def post_flag(run_id: str, req: FlagRequest):
        d = run_dir(run_id)
        report = load_report(d)
        if req.cluster_id not in {c.id for c in report.clusters}:
            raise HTTPException(status_code=404,
                                detail=f"unknown cluster {req.cluster_id}")
        with write_lock(run_id):
            return runs.add_flag(d, req.cluster_id, req.flag_type, req.note)

    @app.get("/api/runs/{run_id}/flags")
    def get_flags(run_id: str):
        return runs.load_flags(run_dir(run_id))

    @app.delete("/api/runs/{run_id}/flags/{flag_id}")
    def delete_flag(run_id: str, flag_id: int):
        with write_lock(run_id):
            if not runs.delete_flag(run_dir(run_id), flag_id):
                raise HTTPException(status_code=404,
                                    detail=f"unknown flag {flag_id}")
        return {"deleted": flag_id}

    @app.post("/api/runs/{run_id}/seed-probe")
    def post_seed_probe(run_id: str, req: SeedProbeRequest):
        import json

        d = run_dir(run_id)
        record = runs.RunRecord.load(d)
        with write_lock(run_id):
            record.stage_status["seed_probe"] = "pending"
            record.save(d)
            try:
                target = load_features(record.artifacts["features"])
                tmani = load_manifest(d / record.artifacts["manifest"])
                seeds = load_features(req.seed_features)
                if req.seed_manifest:
                    smani = load_manifest(req.seed_manifest)
                else:
                    from .features import trivial_manifest
                    smani = trivial_manifest(seeds.ids, source="seeds")
                cfg = UmapConfig(k=req.k, min_dist=req.min_dist,
                                 n_epochs=req.n_epochs, rng_seed=req.rng_seed)
                probe = ProbeConfig(k_vote=req.k_vote,
                                    vote_threshold=req.vote_threshold,
                                    seed_label=req.seed_label)
                result = run_seed_probe(target, tmani, seeds, smani, cfg, probe,
                                        run_dir=d / "seed_probe")
            except EmbedcureError as exc:
                record.stage_status["seed_probe"] = "failed"
                record.save(d)
                raise HTTPException(status_code=422, detail=str(exc))
            record.stage_status["seed_probe"] = "done"
            record.artifacts["seed_probe"] = "seed_probe/probe_result.json"
            record.save(d)
        return json.loads(result.to_json())

    @app.get("/api/runs/{run_id}/export")
    def get_export(run_id: str):
        import json
        try:
            rows = runs.export_outliers(run_dir(run_id))
        except ParameterError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        body = "".join(json.dumps(r) + "\n" for r in rows)
        return Response(content=body, media_type="application/jsonlines")

    return app
