import numpy as np
import pytest

from sph import GrayImage, save_pgm


def random_image(rng, height, width) -> GrayImage:
    return GrayImage(rng.integers(0, 256, (height, width), dtype=np.uint8))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def tiny_dataset_root(tmp_path):
    """Three subjects with gradient-patterned 16x16 PGMs (2, 2, 3 images)."""
    rng = np.random.default_rng(5)
    root = tmp_path / "tinyset"
    for s, count in (("alpha", 2), ("beta", 2), ("gamma", 3)):
        d = root / s
        d.mkdir(parents=True)
        for i in range(count):
            save_pgm(d / f"img{i}.pgm", random_image(rng, 16, 16))
    return root
