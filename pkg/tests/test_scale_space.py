import math

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from core.errors import ArgumentError, ImageSizeError
from core.image import GrayImage, convolve_separable, gaussian_kernel
from core.scale_space import (PyramidParams, build_dog_pyramid,
                              build_gaussian_pyramid, dump_pyramid)


def test_defaults():
    params = PyramidParams()
    assert params.levels_per_octave == 6
    assert params.k == pytest.approx(2 ** (1 / 3))
    assert params.first_octave == 0


@pytest.mark.parametrize("kwargs", [
    {"intervals": 0},
    {"base_sigma": 0.4},
    {"assumed_blur": -0.1},
    {"min_dimension": 2},
    {"initial_doubling": True, "base_sigma": 0.9},
])
def test_invalid_params(kwargs):
    with pytest.raises(ArgumentError):
        PyramidParams(**kwargs)


def test_octave_structure_of_256_image():
    gp = build_gaussian_pyramid(GrayImage(np.random.default_rng(0).random((256, 256))))
    assert len(gp.octaves) == 5
    for octave, levels in enumerate(gp.octaves):
        assert len(levels) == 6
        assert {level.shape for level in levels} == {(256 >> octave, 256 >> octave)}


def test_odd_sizes_floor_between_octaves():
    gp = build_gaussian_pyramid(GrayImage(np.zeros((70, 45))))
    assert [levels[0].shape for levels in gp.octaves] == [(70, 45), (35, 22)]


def test_too_small_image():
    with pytest.raises(ImageSizeError):
        build_gaussian_pyramid(GrayImage(np.zeros((15, 40))))


def test_sigmas_follow_geometric_progression():
    gp = build_gaussian_pyramid(GrayImage(np.zeros((32, 32))))
    k = 2 ** (1 / 3)
    assert gp.sigmas == pytest.approx(tuple(1.6 * k ** i for i in range(6)))
    assert gp.nearest_level(1.6 * k ** 2 * 1.05) == 2
    assert gp.nearest_level(100.0) == 5
    assert gp.nearest_level(0.1) == 0


def test_blur_increases_along_the_octave(textured_image):
    gp = build_gaussian_pyramid(textured_image)
    variances = [level.pixels.var() for level in gp.octaves[0]]
    assert all(b < a for a, b in zip(variances, variances[1:]))


def one_shot_blur(raw, sigma, input_blur):
    return convolve_separable(raw, gaussian_kernel(math.sqrt(sigma ** 2 - input_blur ** 2)))


def interior(pixels, sigma):
    margin = int(math.ceil(4 * sigma)) + 1
    return pixels[margin:-margin, margin:-margin]


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_incremental_chain_matches_one_shot_blur(seed, make_textured):
    for raw in (GrayImage(np.random.default_rng(seed).random((64, 64))), make_textured(128, seed=seed)):
        gp = build_gaussian_pyramid(raw)
        for level, sigma in zip(gp.octaves[0], gp.sigmas):
            reference = one_shot_blur(raw, sigma, gp.params.input_blur)
            # edges are replicated once per step in the chain, so only the interior is comparable
            assert np.max(np.abs(interior(level.pixels - reference.pixels, sigma))) <= 0.01


def test_absolute_blur_of_each_level_within_two_percent():
    raw = GrayImage(np.random.default_rng(7).random((64, 64)))
    gp = build_gaussian_pyramid(raw)
    for level, sigma in zip(gp.octaves[0][1:], gp.sigmas[1:]):
        candidates = sigma * np.linspace(0.95, 1.05, 41)
        errors = [np.mean(interior(level.pixels - one_shot_blur(raw, c, gp.params.input_blur).pixels, sigma) ** 2)
                  for c in candidates]
        best = candidates[int(np.argmin(errors))]
        assert abs(best / sigma - 1.0) <= 0.02


@pytest.mark.parametrize("height,width", [(256, 256), (70, 45), (37, 100), (129, 200)])
def test_total_pixel_count_bound(height, width):
    params = PyramidParams()
    gp = build_gaussian_pyramid(GrayImage(np.zeros((height, width))), params)
    total = sum(level.pixels.size for levels in gp.octaves for level in levels)
    assert total < (params.intervals + 3) * (4 / 3) * width * height


def test_dog_is_adjacent_difference(textured_image):
    gp = build_gaussian_pyramid(textured_image)
    dog = build_dog_pyramid(gp)
    assert len(dog.octaves) == len(gp.octaves)
    for levels, stack in zip(gp.octaves, dog.octaves):
        assert stack.shape[0] == len(levels) - 1
        assert_array_equal(stack[2], levels[3].pixels - levels[2].pixels)


def test_constant_image_has_zero_dog():
    dog = build_dog_pyramid(build_gaussian_pyramid(GrayImage(np.full((40, 40), 0.3))))
    for stack in dog.octaves:
        assert np.max(np.abs(stack)) < 1e-12


def test_initial_doubling_maps_back_with_half_factor():
    params = PyramidParams(initial_doubling=True)
    gp = build_gaussian_pyramid(GrayImage(np.zeros((20, 24))), params)
    assert gp.octaves[0][0].shape == (40, 48)
    assert params.octave_factor(0) == 0.5
    assert params.octave_factor(1) == 1.0


def test_dump_pyramid(tmp_path, textured_image):
    gp = build_gaussian_pyramid(textured_image)
    dog = build_dog_pyramid(gp)
    written = dump_pyramid(gp, dog, tmp_path / "dump")
    octaves = len(gp.octaves)
    assert written == octaves * (6 + 5)
    assert (tmp_path / "dump" / "gaussian" / "o0_s5.pgm").exists()
    assert (tmp_path / "dump" / "dog" / f"o{octaves - 1}_s4.pgm").exists()
