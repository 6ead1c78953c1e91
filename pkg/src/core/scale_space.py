"""
Gaussian and difference-of-Gaussians pyramids for sift-bench
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple

import numpy as np

from core.errors import ArgumentError, ImageSizeError
from core.image import (GrayImage, PathLike, convolve_separable, downsample2,
                        gaussian_kernel, save_image, save_scaled, upsample2)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PyramidParams:
    """Scale-space construction parameters"""

    intervals: int = 3
    base_sigma: float = 1.6
    assumed_blur: float = 0.5
    initial_doubling: bool = False
    min_dimension: int = 16

    def __post_init__(self):
        if int(self.intervals) != self.intervals or self.intervals < 1:
            raise ArgumentError(f"intervals must be an integer >= 1, got {self.intervals}")
        if self.assumed_blur < 0:
            raise ArgumentError(f"assumed_blur must be >= 0, got {self.assumed_blur}")
        if not self.base_sigma > self.input_blur:
            raise ArgumentError(
                f"base_sigma {self.base_sigma} must exceed the input blur {self.input_blur}")
        if int(self.min_dimension) != self.min_dimension or self.min_dimension < 3:
            raise ArgumentError(f"min_dimension must be an integer >= 3, got {self.min_dimension}")

    @property
    def k(self) -> float:
        return 2.0 ** (1.0 / self.intervals)

    @property
    def levels_per_octave(self) -> int:
        return self.intervals + 3

    @property
    def input_blur(self) -> float:
        """Blur already present in the octave-0 input (doubled when the input is upsampled)"""
        return self.assumed_blur * (2.0 if self.initial_doubling else 1.0)

    @property
    def first_octave(self) -> int:
        return -1 if self.initial_doubling else 0

    def level_sigma(self, level: float) -> float:
        """Absolute blur of a (possibly fractional) level, in octave pixels"""
        return self.base_sigma * self.k ** level

    def octave_factor(self, octave: int) -> float:
        """Multiplier from octave pixels to original-image pixels"""
        return 2.0 ** (octave + self.first_octave)


@dataclass(frozen=True)
class GaussianPyramid:
    params: PyramidParams
    octaves: Tuple[Tuple[GrayImage, ...], ...]

    @property
    def sigmas(self) -> Tuple[float, ...]:
        """Absolute blur of each level, identical for every octave"""
        return tuple(self.params.level_sigma(i) for i in range(self.params.levels_per_octave))

    def nearest_level(self, octave_sigma: float) -> int:
        """Index of the level whose blur is closest (in log scale) to octave_sigma"""
        level = int(round(math.log(octave_sigma / self.params.base_sigma) / math.log(self.params.k)))
        return min(max(level, 0), self.params.levels_per_octave - 1)


@dataclass(frozen=True)
class DoGPyramid:
    """One (levels, height, width) array per octave; dog[o][i] = gaussian[o][i+1] - gaussian[o][i]"""

    params: PyramidParams
    octaves: Tuple[np.ndarray, ...]


def build_gaussian_pyramid(img: GrayImage, params: PyramidParams = PyramidParams()) -> GaussianPyramid:
    """
    Build the octave-structured Gaussian scale space

    Octave images carry blur sigma0 * k^i (i = 0 .. s+2) relative to the
    octave resolution. The next octave is seeded by downsampling level s
    (blur 2 * sigma0); octaves are added while both halved dimensions stay
    >= min_dimension.

    Args:
        img: Input image
        params: Pyramid parameters

    Returns:
        Gaussian pyramid with at least one octave

    Raises:
        ImageSizeError: input smaller than min_dimension on either axis
    """
    base = upsample2(img) if params.initial_doubling else img
    if min(base.width, base.height) < params.min_dimension:
        raise ImageSizeError(
            f"image {img.width}x{img.height} is smaller than min_dimension {params.min_dimension}")

    sigma0 = params.base_sigma
    k = params.k
    base = convolve_separable(base, gaussian_kernel(math.sqrt(sigma0 ** 2 - params.input_blur ** 2)))
    increments = [sigma0 * k ** i * math.sqrt(k * k - 1.0) for i in range(params.levels_per_octave - 1)]

    octaves = []
    while True:
        levels = [base]
        for sigma_inc in increments:
            levels.append(convolve_separable(levels[-1], gaussian_kernel(sigma_inc)))
        octaves.append(tuple(levels))

        seed = levels[params.intervals]
        if min(seed.width // 2, seed.height // 2) < params.min_dimension:
            break
        base = downsample2(seed)

    logger.debug(f"Gaussian pyramid: {len(octaves)} octaves of {params.levels_per_octave} levels")
    return GaussianPyramid(params=params, octaves=tuple(octaves))


def build_dog_pyramid(gp: GaussianPyramid) -> DoGPyramid:
    """Adjacent-level differences; no scaling or absolute value"""
    octaves = []
    for levels in gp.octaves:
        stack = np.stack([level.pixels for level in levels])
        dog = stack[1:] - stack[:-1]
        dog.setflags(write=False)
        octaves.append(dog)
    return DoGPyramid(params=gp.params, octaves=tuple(octaves))


def dump_pyramid(gp: GaussianPyramid, dog: DoGPyramid, out_dir: PathLike) -> int:
    """
    Write every pyramid level as PGM for inspection

    Args:
        gp: Gaussian pyramid, written to gaussian/o{octave}_s{level}.pgm
        dog: DoG pyramid, affinely mapped to 0-255 and written to dog/o{octave}_s{level}.pgm
        out_dir: Destination directory (created when missing)

    Returns:
        Number of files written
    """
    out_dir = Path(out_dir)
    (out_dir / "gaussian").mkdir(parents=True, exist_ok=True)
    (out_dir / "dog").mkdir(parents=True, exist_ok=True)

    written = 0
    for octave, levels in enumerate(gp.octaves):
        for level, image in enumerate(levels):
            save_image(image, out_dir / "gaussian" / f"o{octave}_s{level}.pgm")
            written += 1
    for octave, stack in enumerate(dog.octaves):
        for level, difference in enumerate(stack):
            save_scaled(difference, out_dir / "dog" / f"o{octave}_s{level}.pgm")
            written += 1

    logger.info(f"Pyramid dump: {written} files in {out_dir}")
    return written
