"""Pretrained-CNN feature head and the batch extraction loop.

Features are the global-average-pooled activations of the backbone's final
convolutional block, taken before the classification layer: 1024 values
for densenet121, 2048 for resnet50. Extraction runs in inference mode on
CPU; images are loaded and preprocessed by a small worker pool and written
by a single writer in manifest order.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image, UnidentifiedImageError

from .errors import ImageError, SetupError
from .featfile import write_features
from .preprocess import PreprocessConfig, preprocess_image

log = logging.getLogger("featextract")

BACKBONE_WIDTHS = {"densenet121": 1024, "resnet50": 2048}

WEIGHT_URLS = {
    "densenet121": "https://download.pytorch.org/models/densenet121-a639ec97.pth",
    "resnet50": "https://download.pytorch.org/models/resnet50-0676ba61.pth",
}


def load_backbone(name: str = "densenet121",
                  weights_path: str | None = None) -> torch.nn.Module:
    """Backbone in eval mode with the classification layer ignored.

    weights_path must point to a local state-dict file; a missing file is a
    setup error carrying download instructions (no silent network fetch).
    """
    if name not in BACKBONE_WIDTHS:
        raise SetupError(f"unknown backbone {name!r}; "
                         f"choose from {sorted(BACKBONE_WIDTHS)}")
    if weights_path is None or not Path(weights_path).exists():
        raise SetupError(
            f"pretrained weights not found at {weights_path!r}. Download the "
            f"ImageNet weights with:\n"
            f"  curl -o {name}.pth {WEIGHT_URLS[name]}\n"
            f"then pass --weights {name}.pth"
        )
    from torchvision import models

    model = (models.densenet121(weights=None) if name == "densenet121"
             else models.resnet50(weights=None))
    state = torch.load(weights_path, map_location="cpu", weights_only=True)
    model.load_state_dict(state)
    model.eval()
    return model


def penultimate_features(model: torch.nn.Module, batch: torch.Tensor) -> torch.Tensor:
    """Global-average-pooled final block activations for a batch."""
    if hasattr(model, "features"):  # densenet
        out = F.relu(model.features(batch), inplace=False)
    else:  # resnet: everything up to (not including) fc
        out = model.conv1(batch)
        out = model.bn1(out)
        out = model.relu(out)
        out = model.maxpool(out)
        out = model.layer1(out)
        out = model.layer2(out)
        out = model.layer3(out)
        out = model.layer4(out)
    pooled = F.adaptive_avg_pool2d(out, (1, 1))
    return torch.flatten(pooled, 1)


def _load_one(image_dir: Path, row: dict, cfg: PreprocessConfig):
    path = image_dir / row["image_path"]
    try:
        with Image.open(path) as img:
            return row["id"], preprocess_image(img, cfg)
    except (UnidentifiedImageError, OSError) as exc:
        log.warning("skipping undecodable image %s (%s): %s",
                    row["id"], path, exc)
        return row["id"], None


def extract_features(
    image_dir,
    manifest_rows: list[dict],
    out_path,
    model: torch.nn.Module,
    cfg: PreprocessConfig = PreprocessConfig(),
    batch_size: int = 32,
    n_workers: int = 4,
) -> tuple[list[str], list[str]]:
    """Extract features for every decodable manifest row, in manifest order.

    Returns (written ids, skipped ids). Undecodable files are skipped with
    a logged id; zero-area images are an error.
    """
    if batch_size < 1:
        raise ImageError("batch_size must be >= 1")
    image_dir = Path(image_dir)
    loaded: list[tuple[str, np.ndarray]] = []
    skipped: list[str] = []
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        for sid, arr in pool.map(
                lambda row: _load_one(image_dir, row, cfg), manifest_rows):
            if arr is None:
                skipped.append(sid)
            else:
                loaded.append((sid, arr))

    ids = [sid for sid, _ in loaded]
    rows = []
    with torch.inference_mode():
        for start in range(0, len(loaded), batch_size):
            chunk = loaded[start:start + batch_size]
            batch = torch.from_numpy(np.stack([arr for _, arr in chunk]))
            rows.append(penultimate_features(model, batch).numpy())
    values = (np.vstack(rows) if rows
              else np.zeros((0, BACKBONE_WIDTHS["densenet121"]), np.float32))
    write_features(values.astype(np.float32), ids, out_path)
    return ids, skipped
