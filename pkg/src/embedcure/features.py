"""Feature matrices and dataset manifests: in-memory types, binary file
format, JSON-lines manifests, and dataset merging with seed injection.

Feature file layout ("FEATMAT1"):
    magic (8 bytes) | version u32 LE | n_samples u64 LE | n_dims u64 LE |
    values as row-major IEEE-754 binary32 | per-row id block
    (u16 LE byte length + UTF-8 bytes).

Manifest files are JSON-lines, one object per sample, fields:
    id, image_path, view_label, patient_id, source, is_seed.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import AlignmentError, FormatError, IOFailure, MergeError, ValidationError

FEAT_MAGIC = b"FEATMAT1"
FEAT_VERSION = 1


@dataclass(frozen=True)
class FeatureMatrix:
    """Dense n x d float32 matrix with row-aligned sample ids."""

    values: np.ndarray
    ids: tuple[str, ...]

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float32)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "ids", tuple(self.ids))
        validate_features(self.values, self.ids)
        self.values.setflags(write=False)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_dims(self) -> int:
        return self.values.shape[1]


def validate_features(values: np.ndarray, ids: Sequence[str]) -> None:
    if values.ndim != 2:
        raise ValidationError(f"feature array must be 2-D, got shape {values.shape}")
    n, d = values.shape
    if n < 1 or d < 1:
        raise ValidationError(f"feature matrix must be at least 1x1, got {n}x{d}")
    bad = ~np.isfinite(values)
    if bad.any():
        row = int(np.nonzero(bad.any(axis=1))[0][0])
        raise ValidationError(f"non-finite feature value at row {row}")
    if len(ids) != n:
        raise AlignmentError(f"id count {len(ids)} does not match {n} rows")
    if len(set(ids)) != len(ids):
        seen = set()
        dup = next(i for i in ids if i in seen or seen.add(i))
        raise ValidationError(f"duplicate sample id {dup!r}")


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    image_path: Optional[str] = None
    view_label: Optional[str] = None
    patient_id: Optional[str] = None
    source: str = ""
    is_seed: bool = False


@dataclass(frozen=True)
class DatasetManifest:
    """Per-sample metadata, ordered to match a FeatureMatrix row for row."""

    entries: tuple[ManifestEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        ids = [e.id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate ids in manifest")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.entries)

    def by_id(self) -> dict[str, ManifestEntry]:
        return {e.id: e for e in self.entries}

    def check_alignment(self, m: FeatureMatrix) -> None:
        if self.ids != m.ids:
            raise AlignmentError("manifest ids do not match feature matrix ids/order")


def _write_id_block(fh, ids: Iterable[str]) -> None:
    for sid in ids:
        raw = sid.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise ValidationError(f"id too long to serialize: {sid[:32]}...")
        fh.write(struct.pack("<H", len(raw)))
        fh.write(raw)


def _read_id_block(fh, n: int) -> list[str]:
    ids = []
    for _ in range(n):
        hdr = fh.read(2)
        if len(hdr) != 2:
            raise FormatError("truncated id block")
        (length,) = struct.unpack("<H", hdr)
        raw = fh.read(length)
        if len(raw) != length:
            raise FormatError("truncated id string")
        ids.append(raw.decode("utf-8"))
    return ids


def save_features(m: FeatureMatrix, path) -> None:
    """Write a FeatureMatrix in the FEATMAT1 binary layout."""
    path = Path(path)
    try:
        with open(path, "wb") as fh:
            fh.write(FEAT_MAGIC)
            fh.write(struct.pack("<I", FEAT_VERSION))
            fh.write(struct.pack("<QQ", m.n_samples, m.n_dims))
            fh.write(np.ascontiguousarray(m.values, dtype="<f4").tobytes())
            _write_id_block(fh, m.ids)
    except OSError as exc:
        raise IOFailure(f"cannot write feature file {path}: {exc}") from exc


def load_features(path) -> FeatureMatrix:
    """Read a FEATMAT1 file; validates invariants on load."""
    path = Path(path)
    if not path.exists():
        raise IOFailure(f"feature file not found: {path}")
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != FEAT_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}, expected {FEAT_MAGIC!r}")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != FEAT_VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        n, d = struct.unpack("<QQ", fh.read(16))
        raw = fh.read(n * d * 4)
        if len(raw) != n * d * 4:
            raise FormatError(f"{path}: truncated value block")
        values = np.frombuffer(raw, dtype="<f4").reshape(n, d)
        ids = _read_id_block(fh, n)
    return FeatureMatrix(values=values.copy(), ids=tuple(ids))


def save_manifest(manifest: DatasetManifest, path) -> None:
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for e in manifest.entries:
                fh.write(json.dumps({
                    "id": e.id,
                    "image_path": e.image_path,
                    "view_label": e.view_label,
                    "patient_id": e.patient_id,
                    "source": e.source,
                    "is_seed": e.is_seed,
                }) + "\n")
    except OSError as exc:
        raise IOFailure(f"cannot write manifest {path}: {exc}") from exc


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    if not path.exists():
        raise IOFailure(f"manifest not found: {path}")
    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if "id" not in obj:
                raise FormatError(f"{path}:{lineno}: manifest entry missing 'id'")
            entries.append(ManifestEntry(
                id=obj["id"],
                image_path=obj.get("image_path"),
                view_label=obj.get("view_label"),
                patient_id=obj.get("patient_id"),
                source=obj.get("source", ""),
                is_seed=bool(obj.get("is_seed", False)),
            ))
    return DatasetManifest(entries=tuple(entries))


def trivial_manifest(ids: Sequence[str], source: str = "") -> DatasetManifest:
    """Manifest with ids only, for feature files without a sidecar."""
    return DatasetManifest(entries=tuple(ManifestEntry(id=i, source=source) for i in ids))


def merge_datasets(
    target: FeatureMatrix,
    target_manifest: DatasetManifest,
    seeds: Optional[FeatureMatrix],
    seed_manifest: Optional[DatasetManifest] = None,
    seed_label: str = "seed",
) -> tuple[FeatureMatrix, DatasetManifest]:
    """Concatenate seed rows after target rows, flagging seeds.

    Seed entries come out with is_seed=True and view_label=seed_label;
    target entries pass through unchanged. Id collisions between the two
    sets are resolved by prefixing the colliding ids with their source tag
    ("target"/"seeds" when the manifest carries no tag). An empty seed set
    is passed as seeds=None and yields the target unchanged.
    """
    target_manifest.check_alignment(target)
    if seeds is None:
        return target, target_manifest
    if seed_manifest is None:
        seed_manifest = trivial_manifest(seeds.ids, source="seeds")
    seed_manifest.check_alignment(seeds)
    if target.n_dims != seeds.n_dims:
        raise MergeError(
            f"dimension mismatch: target has {target.n_dims} dims, seeds have {seeds.n_dims}"
        )

    clashes = set(target.ids) & set(seeds.ids)

    def resolve(entry: ManifestEntry, role: str) -> ManifestEntry:
        if entry.id in clashes:
            prefix = entry.source or role
            return replace(entry, id=f"{prefix}/{entry.id}")
        return entry

    t_entries = [resolve(e, "target") for e in target_manifest.entries]
    s_entries = [
        replace(resolve(e, "seeds"), is_seed=True, view_label=seed_label)
        for e in seed_manifest.entries
    ]
    entries = tuple(t_entries) + tuple(s_entries)
    values = np.vstack([target.values, seeds.values])
    merged = FeatureMatrix(values=values, ids=tuple(e.id for e in entries))
    return merged, DatasetManifest(entries=entries)
