"""Image preprocessing: histogram equalization, resize, center crop,
ImageNet normalization.

The pipeline runs on the grayscale image, then replicates to 3 channels so
the normalized tensor matches what an ImageNet-pretrained backbone expects.
Order of operations: equalize, resize (min side), center crop, scale to
[0, 1], replicate, normalize per channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import ImageError


@dataclass(frozen=True)
class PreprocessConfig:
    resize_min_side: int = 256
    crop: int = 224
    normalize_mean: tuple[float, float, float] = (0.485, 0.456, 0.406)
    normalize_std: tuple[float, float, float] = (0.229, 0.224, 0.225)
    hist_eq: bool = True

    def __post_init__(self):
        if self.crop > self.resize_min_side:
            raise ValueError(
                f"crop {self.crop} exceeds resize_min_side {self.resize_min_side}")
        if any(s <= 0 for s in self.normalize_std):
            raise ValueError("normalize_std components must be positive")


def equalize_histogram(gray: np.ndarray) -> np.ndarray:
    """Global 256-bin CDF equalization of a uint8 image."""
    hist = np.bincount(gray.ravel(), minlength=256)
    cdf = hist.cumsum()
    nonzero = cdf[cdf > 0]
    if nonzero.size == 0:
        return gray
    cdf_min = int(nonzero[0])
    total = int(cdf[-1])
    if total == cdf_min:
        # single gray level; equalization leaves it unchanged
        return gray
    table = np.round((cdf - cdf_min) / (total - cdf_min) * 255.0)
    return np.clip(table, 0, 255).astype(np.uint8)[gray]


def _resize_min_side(img: Image.Image, min_side: int) -> Image.Image:
    w, h = img.size
    if min(w, h) == min_side:
        return img
    scale = min_side / min(w, h)
    new_size = (max(1, round(w * scale)), max(1, round(h * scale)))
    return img.resize(new_size, Image.BILINEAR)


def _center_crop(arr: np.ndarray, crop: int) -> np.ndarray:
    h, w = arr.shape
    top = (h - crop) // 2
    left = (w - crop) // 2
    return arr[top:top + crop, left:left + crop]


def preprocess_image(image: Image.Image,
                     cfg: PreprocessConfig = PreprocessConfig()) -> np.ndarray:
    """Normalized 3 x crop x crop float32 array for one image."""
    w, h = image.size
    if w == 0 or h == 0:
        raise ImageError("zero-area image")
    gray = image.convert("L")
    if cfg.hist_eq:
        gray = Image.fromarray(equalize_histogram(np.asarray(gray)))
    gray = _resize_min_side(gray, cfg.resize_min_side)
    arr = _center_crop(np.asarray(gray), cfg.crop).astype(np.float32) / 255.0
    out = np.empty((3, cfg.crop, cfg.crop), dtype=np.float32)
    for c in range(3):
        out[c] = (arr - cfg.normalize_mean[c]) / cfg.normalize_std[c]
    return out
