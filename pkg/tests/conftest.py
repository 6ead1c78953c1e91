"""
Shared fixtures for the sift-bench test suite
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Same layout as main.py: src/ holds the packages
ROOT_DIR = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT_DIR / "src"))
sys.path.insert(0, str(ROOT_DIR))

from core.image import GrayImage, save_image  # noqa: E402


def textured_pixels(size: int = 96, seed: int = 0, height: int = None) -> np.ndarray:
    """Gaussian blobs and soft-edged rectangles on mid-gray; rich in DoG extrema"""
    rng = np.random.default_rng(seed)
    height = height or size
    ys, xs = np.mgrid[0:height, 0:size].astype(np.float64)
    pixels = np.full((height, size), 0.5)

    for _ in range(max(12, size * height // 300)):
        cx, cy = rng.uniform(6, size - 6), rng.uniform(6, height - 6)
        sigma = rng.uniform(1.5, 5.0)
        amplitude = rng.choice([-1.0, 1.0]) * rng.uniform(0.25, 0.5)
        pixels += amplitude * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * sigma * sigma))

    for _ in range(5):
        x0, y0 = rng.integers(0, size - 12), rng.integers(0, height - 12)
        w, h = rng.integers(6, 20), rng.integers(6, 20)
        pixels[y0:y0 + h, x0:x0 + w] += rng.choice([-1.0, 1.0]) * rng.uniform(0.15, 0.3)

    return np.clip(pixels, 0.0, 1.0)


@pytest.fixture
def textured_image():
    return GrayImage(textured_pixels(96, seed=1))


@pytest.fixture
def make_textured():
    """Factory: make_textured(size, seed, height=None) -> GrayImage"""
    def factory(size=96, seed=0, height=None):
        return GrayImage(textured_pixels(size, seed, height))
    return factory


@pytest.fixture
def constant_image():
    return GrayImage(np.full((64, 64), 0.5))


@pytest.fixture
def ramp_image():
    """Intensity increasing along +x: every interior gradient points at 0 degrees"""
    xs = np.arange(64, dtype=np.float64)
    return GrayImage(np.tile(0.2 + 0.008 * xs, (64, 1)))


@pytest.fixture
def corpus_dir(tmp_path):
    """Four distinct textured 96x96 PGM images"""
    root = tmp_path / "corpus"
    root.mkdir()
    for index, seed in enumerate((11, 12, 13, 14)):
        save_image(GrayImage(textured_pixels(96, seed)), root / f"img_{index:02d}.pgm")
    return root


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    """Point the default configuration file into the test's temp dir"""
    path = tmp_path / "home" / "config.json"
    monkeypatch.setattr("utils.config.DEFAULT_CONFIG_FILE", path)
    return path


@pytest.fixture(scope="module")
def desk_corpus_dir(tmp_path_factory):
    """Ten distinct textured 128x128 PGM images (45 distinct pairs)"""
    root = tmp_path_factory.mktemp("desk_corpus")
    for index in range(10):
        save_image(GrayImage(textured_pixels(128, seed=101 + index)), root / f"desk_{index:02d}.pgm")
    return root
