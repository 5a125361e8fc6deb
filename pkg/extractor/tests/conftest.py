import numpy as np
import pytest
import torch
from PIL import Image


@pytest.fixture(scope="session")
def densenet():
    """Randomly initialized backbone in eval mode (architecture checks do
    not need pretrained weights)."""
    from torchvision import models

    torch.manual_seed(0)
    model = models.densenet121(weights=None)
    model.eval()
    return model


@pytest.fixture(scope="session")
def densenet_weights(densenet, tmp_path_factory):
    path = tmp_path_factory.mktemp("weights") / "densenet121.pth"
    torch.save(densenet.state_dict(), path)
    return path


def gradient_image(w=300, h=260, seed=0):
    rng = np.random.RandomState(seed)
    base = np.linspace(0, 255, w, dtype=np.float64)[None, :]
    arr = np.clip(base + rng.randint(0, 40, size=(h, w)), 0, 255).astype(np.uint8)
    return Image.fromarray(arr, mode="L")
