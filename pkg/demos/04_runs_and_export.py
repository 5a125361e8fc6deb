"""Walkthrough: the persisted run workflow behind the CLI and the service.

Saves a feature file, embeds it into a content-addressed run directory,
clusters the result, flags a satellite, and exports the outlier manifest.
Repeating the embed step reuses the finished run instead of recomputing.
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from embedcure import FeatureMatrix, UmapConfig, save_features
from embedcure.runs import (
    add_flag,
    export_outliers,
    list_runs,
    run_detect,
    run_embed,
)

rng = np.random.RandomState(3)
values = np.vstack([
    rng.randn(300, 8),
    rng.randn(12, 8) * 0.3 + 25.0,   # a small detached blob
]).astype(np.float32)
m = FeatureMatrix(values=values, ids=tuple(f"img{i:04d}" for i in range(312)))

workdir = Path(tempfile.mkdtemp(prefix="embedcure-demo-"))
feature_path = workdir / "demo.featmat"
save_features(m, feature_path)
run_root = workdir / "runs"

cfg = UmapConfig(k=8, n_epochs=100, rng_seed=0)
record, run_dir = run_embed(feature_path, None, run_root, umap_cfg=cfg)
print(f"run {record.run_id} written to {run_dir}")
print(f"stage status: {record.stage_status}")

# identical inputs and config land on the same run id and are reused
again, _ = run_embed(feature_path, None, run_root, umap_cfg=cfg)
print(f"repeat embed reused run {again.run_id}: "
      f"{again.run_id == record.run_id}")

report = run_detect(run_dir, min_pts=5, main_fraction=0.2)
satellites = [c for c in report.clusters if c.kind == "satellite"]
print(f"detect found {len(satellites)} satellite cluster(s)")

flag = add_flag(run_dir, satellites[0].id, "satellite", note="demo flag")
print(f"flagged cluster {satellites[0].id} as flag #{flag['flag_id']}")

rows = export_outliers(run_dir)
print(f"export produced {len(rows)} outlier rows, first three:")
for row in rows[:3]:
    print("  " + json.dumps(row))

print()
print(f"runs under {run_root}: {[r.run_id for r in list_runs(run_root)]}")
print("the same directory serves the HTTP API: "
      f"embedcure serve --run-root {run_root}")
