from .errors import ExtractError, ImageError, IOFailure, SetupError
from .featfile import read_manifest, write_features
from .model import (
    BACKBONE_WIDTHS,
    extract_features,
    load_backbone,
    penultimate_features,
)
from .preprocess import PreprocessConfig, equalize_histogram, preprocess_image

__all__ = [
    "BACKBONE_WIDTHS",
    "ExtractError",
    "ImageError",
    "IOFailure",
    "PreprocessConfig",
    "SetupError",
    "equalize_histogram",
    "extract_features",
    "load_backbone",
    "penultimate_features",
    "preprocess_image",
    "read_manifest",
    "write_features",
]
