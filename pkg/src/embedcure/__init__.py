"""Embedding-based curation of large image datasets.

Pipeline: feature matrices -> kNN graph -> fuzzy weighted graph -> 2-D
layout (stochastic gradient descent with negative sampling) -> satellite
cluster detection and seed-probe mislabel recovery, plus a CLI and an HTTP
service for the human-in-the-loop workflow.
"""

from .features import (
    DatasetManifest,
    FeatureMatrix,
    ManifestEntry,
    load_features,
    load_manifest,
    merge_datasets,
    save_features,
    save_manifest,
    trivial_manifest,
)
from .knn import NeighborGraph, knn_descent, knn_exact, knn_recall
from .fuzzy import (
    Calibration,
    FuzzyGraph,
    calibrate_smooth_knn,
    connected_components,
    fuzzy_union,
    membership_strengths,
)
from .layout import (
    Embedding,
    UmapConfig,
    fit_ab,
    init_embedding,
    load_embedding,
    optimize_layout,
    save_embedding,
    umap_embed,
)
from .baselines import TsneConfig, pca_project, tsne_embed
from .detect import (
    ClusterReport,
    auto_eps,
    classify_clusters,
    density_cluster,
    outlier_manifest,
)
from .seedprobe import ProbeConfig, SeedProbeResult, probe_mislabels, run_seed_probe

__version__ = "0.1.0"
