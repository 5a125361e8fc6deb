"""Feature-file and manifest I/O.

The output format is the shared FEATMAT1 layout consumed by the embedding
pipeline: magic "FEATMAT1", u32 version, u64 n, u64 d, little-endian
binary32 values row-major, then per-row ids as u16 length + UTF-8 bytes.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import IOFailure

FEAT_MAGIC = b"FEATMAT1"
FEAT_VERSION = 1


def write_features(values: np.ndarray, ids: list[str], path) -> None:
    values = np.asarray(values, dtype=np.float32)
    if values.ndim != 2 or values.shape[0] != len(ids):
        raise ValueError("values must be 2-D with one row per id")
    if not np.isfinite(values).all():
        raise ValueError("non-finite feature values")
    try:
        with open(path, "wb") as fh:
            fh.write(FEAT_MAGIC)
            fh.write(struct.pack("<I", FEAT_VERSION))
            fh.write(struct.pack("<QQ", values.shape[0], values.shape[1]))
            fh.write(np.ascontiguousarray(values, dtype="<f4").tobytes())
            for sid in ids:
                raw = sid.encode("utf-8")
                fh.write(struct.pack("<H", len(raw)))
                fh.write(raw)
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def read_manifest(path) -> list[dict]:
    """JSON-lines manifest rows; each needs at least id and image_path."""
    path = Path(path)
    if not path.exists():
        raise IOFailure(f"manifest not found: {path}")
    rows = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line:
            rows.append(json.loads(line))
    return rows
