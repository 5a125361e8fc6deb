import numpy as np
import pytest
from PIL import Image

from featextract import PreprocessConfig, equalize_histogram, preprocess_image
from featextract.errors import ImageError
from featextract.preprocess import _resize_min_side
from conftest import gradient_image


def test_config_invariants():
    with pytest.raises(ValueError, match="crop"):
        PreprocessConfig(resize_min_side=200, crop=224)
    with pytest.raises(ValueError, match="std"):
        PreprocessConfig(normalize_std=(0.2, 0.0, 0.2))


def test_constant_midgray_closed_form():
    img = Image.new("L", (256, 256), color=128)
    out = preprocess_image(img, PreprocessConfig(hist_eq=False))
    cfg = PreprocessConfig()
    # closed form computed with the same float32 arithmetic
    x = np.float32(128) / 255.0
    for c in range(3):
        expected = (x - cfg.normalize_mean[c]) / cfg.normalize_std[c]
        assert np.unique(out[c]).tolist() == [np.float32(expected)]


def test_resize_rule_min_side():
    # 512x256 already has min side 256: kept as is, then center-cropped
    img = Image.new("L", (512, 256), color=0)
    assert _resize_min_side(img, 256).size == (512, 256)
    # 1024x512 scales down so the min side hits 256
    assert _resize_min_side(Image.new("L", (1024, 512), color=0), 256).size \
        == (512, 256)
    # small images scale up
    assert _resize_min_side(Image.new("L", (100, 50), color=0), 256).size \
        == (512, 256)


def test_output_shape_invariant_across_inputs():
    for size in [(256, 256), (512, 256), (640, 480), (64, 300), (225, 225)]:
        for mode, color in [("L", 90), ("RGB", (10, 200, 30))]:
            img = Image.new(mode, size, color=color)
            out = preprocess_image(img)
            assert out.shape == (3, 224, 224)
            assert out.dtype == np.float32


def test_grayscale_replicated_before_normalization():
    out = preprocess_image(gradient_image(), PreprocessConfig(hist_eq=False))
    cfg = PreprocessConfig()
    recovered = [out[c] * cfg.normalize_std[c] + cfg.normalize_mean[c]
                 for c in range(3)]
    assert np.allclose(recovered[0], recovered[1], atol=1e-6)
    assert np.allclose(recovered[0], recovered[2], atol=1e-6)


def hist_eq_oracle(gray):
    """Straightforward per-pixel reference over the 256-bin CDF."""
    flat = gray.ravel()
    counts = [0] * 256
    for v in flat:
        counts[v] += 1
    cdf, total = [], 0
    for c in counts:
        total += c
        cdf.append(total)
    cdf_min = next(c for c in cdf if c > 0)
    out = np.empty_like(flat)
    for i, v in enumerate(flat):
        if cdf[-1] == cdf_min:
            out[i] = v
        else:
            out[i] = int(round((cdf[v] - cdf_min) / (cdf[-1] - cdf_min) * 255))
    return out.reshape(gray.shape)


def test_hist_eq_matches_oracle_single_white_pixel():
    gray = np.zeros((32, 32), dtype=np.uint8)
    gray[5, 7] = 255
    assert np.array_equal(equalize_histogram(gray), hist_eq_oracle(gray))


def test_hist_eq_matches_oracle_random():
    rng = np.random.RandomState(0)
    gray = rng.randint(0, 256, size=(40, 30)).astype(np.uint8)
    assert np.array_equal(equalize_histogram(gray), hist_eq_oracle(gray))


def test_hist_eq_uniform_image_unchanged():
    gray = np.full((16, 16), 77, dtype=np.uint8)
    assert np.array_equal(equalize_histogram(gray), gray)


def test_hist_eq_spreads_low_contrast():
    rng = np.random.RandomState(1)
    gray = rng.randint(100, 120, size=(64, 64)).astype(np.uint8)
    eq = equalize_histogram(gray)
    assert eq.max() - eq.min() > gray.max() - gray.min()


def test_zero_area_image_rejected():
    with pytest.raises(ImageError, match="zero-area"):
        preprocess_image(Image.new("L", (0, 0)))
