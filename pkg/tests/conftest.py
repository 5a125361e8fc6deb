import numpy as np
import pytest

from embedcure import DatasetManifest, FeatureMatrix, ManifestEntry


def make_matrix(values, prefix="s"):
    values = np.asarray(values, dtype=np.float32)
    ids = tuple(f"{prefix}{i}" for i in range(values.shape[0]))
    return FeatureMatrix(values=values, ids=ids)


def make_manifest(ids, view_labels=None, patient_ids=None, source="", is_seed=False):
    entries = []
    for i, sid in enumerate(ids):
        entries.append(ManifestEntry(
            id=sid,
            view_label=view_labels[i] if view_labels else None,
            patient_id=patient_ids[i] if patient_ids else None,
            source=source,
            is_seed=is_seed,
        ))
    return DatasetManifest(entries=tuple(entries))


@pytest.fixture
def rng():
    return np.random.RandomState(1234)


@pytest.fixture
def blob_matrix(rng):
    """Three well-separated 16-D blobs of 60 points each."""
    blobs = [rng.randn(60, 16) + 8.0 * c for c in range(3)]
    labels = np.repeat(np.arange(3), 60)
    return make_matrix(np.vstack(blobs)), labels
