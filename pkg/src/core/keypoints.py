"""
Keypoint detection, refinement, orientation assignment and descriptors for sift-bench
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.ndimage import convolve1d

from core.errors import ArgumentError
from core.image import GrayImage, bilinear_sample_many
from core.scale_space import (DoGPyramid, GaussianPyramid, PyramidParams,
                              build_dog_pyramid, build_gaussian_pyramid)

logger = logging.getLogger(__name__)

SINGULAR_DET = 1e-12

DESCRIPTOR_GRID = 16
DESCRIPTOR_CELLS = 4
DESCRIPTOR_BINS = 8
DESCRIPTOR_CLAMP = 0.2
DESCRIPTOR_WEIGHT_SIGMA = 8.0
CELL_SPAN_SIGMAS = 3.0
DESCRIPTOR_LENGTH = DESCRIPTOR_CELLS * DESCRIPTOR_CELLS * DESCRIPTOR_BINS

ORIENTATION_WINDOW_FACTOR = 1.5
ORIENTATION_RADIUS_FACTOR = 3.0
ORIENTATION_SMOOTHING_PASSES = 2

NEIGHBOR_OFFSETS = tuple(
    (ds, dy, dx)
    for ds in (-1, 0, 1) for dy in (-1, 0, 1) for dx in (-1, 0, 1)
    if (ds, dy, dx) != (0, 0, 0)
)


@dataclass(frozen=True)
class DetectorParams:
    """Thresholds for keypoint refinement and orientation assignment"""

    contrast_threshold: float = 0.03
    edge_ratio: float = 10.0
    max_refine_iterations: int = 5
    orientation_bins: int = 36
    peak_ratio: float = 0.8
    prefilter_ratio: float = 0.5

    def __post_init__(self):
        if self.contrast_threshold <= 0:
            raise ArgumentError(f"contrast_threshold must be > 0, got {self.contrast_threshold}")
        if self.edge_ratio <= 0:
            raise ArgumentError(f"edge_ratio must be > 0, got {self.edge_ratio}")
        if int(self.max_refine_iterations) != self.max_refine_iterations or self.max_refine_iterations < 1:
            raise ArgumentError(f"max_refine_iterations must be an integer >= 1, got {self.max_refine_iterations}")
        if int(self.orientation_bins) != self.orientation_bins or self.orientation_bins < 3:
            raise ArgumentError(f"orientation_bins must be an integer >= 3, got {self.orientation_bins}")
        if not 0 < self.peak_ratio <= 1:
            raise ArgumentError(f"peak_ratio must be in (0, 1], got {self.peak_ratio}")
        if self.prefilter_ratio < 0:
            raise ArgumentError(f"prefilter_ratio must be >= 0, got {self.prefilter_ratio}")

    @property
    def edge_limit(self) -> float:
        """Upper bound (exclusive) on trace^2 / det of the spatial Hessian"""
        return (self.edge_ratio + 1.0) ** 2 / self.edge_ratio


@dataclass(frozen=True)
class RawExtremum:
    octave: int
    level: int
    ix: int
    iy: int
    is_maximum: bool


@dataclass(frozen=True)
class Keypoint:
    """Refined feature; x, y and sigma are in original-image pixels, orientation in degrees"""

    x: float
    y: float
    sigma: float
    orientation: float
    response: float
    octave: int = 0
    level: int = 0

    def with_orientation(self, orientation: float) -> "Keypoint":
        return replace(self, orientation=orientation)

    @property
    def sort_key(self) -> Tuple[int, int, float, float, float]:
        return (self.octave, self.level, self.y, self.x, self.orientation)


@dataclass(frozen=True)
class Descriptor128:
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.shape != (DESCRIPTOR_LENGTH,):
            raise ArgumentError(f"descriptor must have {DESCRIPTOR_LENGTH} values, got shape {values.shape}")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ArgumentError("descriptor values must be finite and non-negative")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


Feature = Tuple[Keypoint, Descriptor128]


# ---------------------------------------------------------------------------
# Extrema
# ---------------------------------------------------------------------------

def detect_extrema(dog: DoGPyramid) -> List[RawExtremum]:
    """
    Find samples strictly above (maxima) or strictly below (minima) all 26
    scale-space neighbours. The first and last DoG level of each octave and
    one-pixel image borders are never candidates.

    Args:
        dog: DoG pyramid, every octave with >= 3 levels

    Returns:
        Extrema ordered by octave, level, iy, ix
    """
    extrema = []
    for octave, stack in enumerate(dog.octaves):
        levels, height, width = stack.shape
        if levels < 3:
            raise ArgumentError(f"octave {octave} has {levels} DoG levels, need at least 3")
        if height < 3 or width < 3:
            continue

        center = stack[1:-1, 1:-1, 1:-1]
        greater = np.ones(center.shape, dtype=bool)
        less = np.ones(center.shape, dtype=bool)
        for ds, dy, dx in NEIGHBOR_OFFSETS:
            neighbor = stack[1 + ds:levels - 1 + ds, 1 + dy:height - 1 + dy, 1 + dx:width - 1 + dx]
            greater &= center > neighbor
            less &= center < neighbor

        found = np.nonzero(greater | less)
        for level, iy, ix in zip(*found):
            extrema.append(RawExtremum(
                octave=octave,
                level=int(level) + 1,
                ix=int(ix) + 1,
                iy=int(iy) + 1,
                is_maximum=bool(greater[level, iy, ix]),
            ))

    logger.debug(f"Scale-space extrema: {len(extrema)}")
    return extrema


# ---------------------------------------------------------------------------
# Refinement
# ---------------------------------------------------------------------------

def _cube_derivatives(cube: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Central-difference gradient and Hessian at the centre of a [s, y, x] 3x3x3 cube, in (x, y, s) order"""
    center = cube[1, 1, 1]
    dx = 0.5 * (cube[1, 1, 2] - cube[1, 1, 0])
    dy = 0.5 * (cube[1, 2, 1] - cube[1, 0, 1])
    ds = 0.5 * (cube[2, 1, 1] - cube[0, 1, 1])

    dxx = cube[1, 1, 2] - 2.0 * center + cube[1, 1, 0]
    dyy = cube[1, 2, 1] - 2.0 * center + cube[1, 0, 1]
    dss = cube[2, 1, 1] - 2.0 * center + cube[0, 1, 1]
    dxy = 0.25 * (cube[1, 2, 2] - cube[1, 2, 0] - cube[1, 0, 2] + cube[1, 0, 0])
    dxs = 0.25 * (cube[2, 1, 2] - cube[2, 1, 0] - cube[0, 1, 2] + cube[0, 1, 0])
    dys = 0.25 * (cube[2, 2, 1] - cube[2, 0, 1] - cube[0, 2, 1] + cube[0, 0, 1])

    gradient = np.array([dx, dy, ds])
    hessian = np.array([[dxx, dxy, dxs],
                        [dxy, dyy, dys],
                        [dxs, dys, dss]])
    return gradient, hessian


def fit_quadratic(cube: np.ndarray) -> Optional[Tuple[np.ndarray, float, np.ndarray]]:
    """
    Fit the second-order Taylor model of D around the centre of a 3x3x3 cube

    Args:
        cube: Samples indexed [s, y, x]

    Returns:
        (offset, value, hessian): extremum offset in (x, y, s), the model
        value D + 0.5 * g . offset there, and the 3x3 Hessian; None when the
        Hessian is singular
    """
    gradient, hessian = _cube_derivatives(cube)
    if abs(np.linalg.det(hessian)) < SINGULAR_DET:
        return None
    offset = -np.linalg.solve(hessian, gradient)
    value = float(cube[1, 1, 1] + 0.5 * gradient @ offset)
    return offset, value, hessian


def passes_edge_test(hessian: np.ndarray, p: DetectorParams) -> bool:
    """Principal-curvature ratio test on the 2x2 spatial block of the Hessian"""
    trace = hessian[0, 0] + hessian[1, 1]
    det = hessian[0, 0] * hessian[1, 1] - hessian[0, 1] * hessian[1, 0]
    if det <= 0:
        return False
    return trace * trace / det < p.edge_limit


def refine_keypoint(dog: DoGPyramid, e: RawExtremum, p: DetectorParams = DetectorParams()) -> Optional[Keypoint]:
    """
    Localize an extremum to subpixel/subscale accuracy and reject unstable ones

    The sample moves to the neighbour indicated by any offset component
    beyond 0.5 and the fit is repeated, at most max_refine_iterations times.

    Args:
        dog: Pyramid the extremum came from
        e: Raw extremum
        p: Detector thresholds

    Returns:
        Keypoint in original-image units (orientation 0), or None when rejected
    """
    stack = dog.octaves[e.octave]
    levels, height, width = stack.shape
    x, y, level = e.ix, e.iy, e.level

    for _ in range(p.max_refine_iterations):
        cube = stack[level - 1:level + 2, y - 1:y + 2, x - 1:x + 2]
        fit = fit_quadratic(cube)
        if fit is None:
            return None
        offset, value, hessian = fit
        if np.all(np.abs(offset) <= 0.5):
            break
        x += int(round(offset[0]))
        y += int(round(offset[1]))
        level += int(round(offset[2]))
        if not (1 <= level <= levels - 2 and 1 <= x <= width - 2 and 1 <= y <= height - 2):
            return None
    else:
        return None

    if abs(value) < p.contrast_threshold:
        return None
    if not passes_edge_test(hessian, p):
        return None

    params = dog.params
    factor = params.octave_factor(e.octave)
    return Keypoint(
        x=(x + offset[0]) * factor,
        y=(y + offset[1]) * factor,
        sigma=params.level_sigma(level + offset[2]) * factor,
        orientation=0.0,
        response=abs(value),
        octave=e.octave,
        level=level,
    )


# ---------------------------------------------------------------------------
# Orientation
# ---------------------------------------------------------------------------

def compute_gradient(image: GrayImage, x: int, y: int) -> Tuple[float, float]:
    """
    Pixel-difference gradient magnitude and orientation (degrees in [0, 360))

    A zero gradient reports orientation 0.
    """
    if not (1 <= x <= image.width - 2 and 1 <= y <= image.height - 2):
        raise ArgumentError(f"gradient at ({x}, {y}) needs a one-pixel margin in a {image.width}x{image.height} image")
    pixels = image.pixels
    dx = float(pixels[y, x + 1] - pixels[y, x - 1])
    dy = float(pixels[y + 1, x] - pixels[y - 1, x])
    magnitude = math.hypot(dx, dy)
    if magnitude == 0.0:
        return 0.0, 0.0
    return magnitude, _wrap_degrees(math.degrees(math.atan2(dy, dx)))


def _wrap_degrees(angle: float) -> float:
    angle = angle % 360.0
    return 0.0 if angle >= 360.0 else angle


def orientation_histogram(gp: GaussianPyramid, kp: Keypoint, bins: int) -> Optional[np.ndarray]:
    """Raw Gaussian-weighted gradient-orientation histogram around kp, None when the window is empty"""
    params = gp.params
    factor = params.octave_factor(kp.octave)
    octave_sigma = kp.sigma / factor
    pixels = gp.octaves[kp.octave][gp.nearest_level(octave_sigma)].pixels
    height, width = pixels.shape

    cx, cy = kp.x / factor, kp.y / factor
    sigma_w = ORIENTATION_WINDOW_FACTOR * octave_sigma
    radius = int(round(ORIENTATION_RADIUS_FACTOR * sigma_w))
    x0, y0 = int(round(cx)), int(round(cy))
    x_lo, x_hi = max(x0 - radius, 1), min(x0 + radius, width - 2)
    y_lo, y_hi = max(y0 - radius, 1), min(y0 + radius, height - 2)
    if x_lo > x_hi or y_lo > y_hi:
        return None

    rows = slice(y_lo, y_hi + 1)
    cols = slice(x_lo, x_hi + 1)
    dx = pixels[rows, x_lo + 1:x_hi + 2] - pixels[rows, x_lo - 1:x_hi]
    dy = pixels[y_lo + 1:y_hi + 2, cols] - pixels[y_lo - 1:y_hi, cols]
    magnitude = np.hypot(dx, dy)
    theta = np.degrees(np.arctan2(dy, dx)) % 360.0

    grid_x, grid_y = np.meshgrid(np.arange(x_lo, x_hi + 1), np.arange(y_lo, y_hi + 1))
    weight = np.exp(-((grid_x - cx) ** 2 + (grid_y - cy) ** 2) / (2.0 * sigma_w * sigma_w))

    index = np.rint(theta * bins / 360.0).astype(np.intp) % bins
    return np.bincount(index.ravel(), weights=(weight * magnitude).ravel(), minlength=bins)


def smooth_histogram(hist: np.ndarray, passes: int = ORIENTATION_SMOOTHING_PASSES) -> np.ndarray:
    """Circular 3-tap box filter applied `passes` times"""
    for _ in range(passes):
        hist = convolve1d(hist, np.full(3, 1.0 / 3.0), mode="wrap")
    return hist


def histogram_peaks(hist: np.ndarray, peak_ratio: float) -> List[float]:
    """Parabolically interpolated peak orientations (degrees) of a circular histogram"""
    bins = hist.size
    global_peak = hist.max()
    if global_peak <= 0:
        return []

    left = np.roll(hist, 1)
    right = np.roll(hist, -1)
    peaks = np.nonzero((hist > left) & (hist >= right) & (hist >= peak_ratio * global_peak))[0]

    orientations = []
    for k in peaks:
        l_value, c_value, r_value = left[k], hist[k], right[k]
        denom = l_value - 2.0 * c_value + r_value
        shift = 0.5 * (l_value - r_value) / denom if denom != 0 else 0.0
        orientations.append(_wrap_degrees((k + shift) * 360.0 / bins))
    return orientations


def assign_orientations(gp: GaussianPyramid, kp: Keypoint, p: DetectorParams = DetectorParams()) -> List[Keypoint]:
    """
    One keypoint per dominant local gradient direction

    Args:
        gp: Gaussian pyramid the keypoint was detected in
        kp: Refined keypoint
        p: Detector parameters (bins, peak ratio)

    Returns:
        Keypoints with orientation set; empty when the window has no gradient
    """
    hist = orientation_histogram(gp, kp, p.orientation_bins)
    if hist is None:
        return []
    return [kp.with_orientation(phi) for phi in histogram_peaks(smooth_histogram(hist), p.peak_ratio)]


# ---------------------------------------------------------------------------
# Descriptor
# ---------------------------------------------------------------------------

def compute_descriptor(gp: GaussianPyramid, kp: Keypoint) -> Optional[Descriptor128]:
    """
    Orientation-normalized 4x4x8 gradient histogram around kp

    A 16x16 sample grid, spaced so each 4x4-sample cell spans 3 keypoint
    sigmas, is rotated by the keypoint orientation. Gradients are taken along
    the rotated grid axes, weighted by a Gaussian of 8 grid units and spread
    over cells and orientation bins by trilinear interpolation. The vector is
    normalized, clamped at 0.2 and renormalized.

    Args:
        gp: Gaussian pyramid
        kp: Keypoint with orientation

    Returns:
        Descriptor, or None when the grid leaves the image or has no gradient
    """
    params = gp.params
    factor = params.octave_factor(kp.octave)
    octave_sigma = kp.sigma / factor
    image = gp.octaves[kp.octave][gp.nearest_level(octave_sigma)]

    samples_per_cell = DESCRIPTOR_GRID // DESCRIPTOR_CELLS
    spacing = CELL_SPAN_SIGMAS * octave_sigma / samples_per_cell
    grid = np.arange(DESCRIPTOR_GRID) - (DESCRIPTOR_GRID - 1) / 2.0
    u, v = np.meshgrid(grid, grid)

    phi = math.radians(kp.orientation)
    cos_phi, sin_phi = math.cos(phi), math.sin(phi)
    cx, cy = kp.x / factor, kp.y / factor
    px = cx + spacing * (cos_phi * u - sin_phi * v)
    py = cy + spacing * (sin_phi * u + cos_phi * v)

    if (px.min() - 1.0 < 0 or px.max() + 1.0 > image.width - 1
            or py.min() - 1.0 < 0 or py.max() + 1.0 > image.height - 1):
        return None

    grad_u = (bilinear_sample_many(image, px + cos_phi, py + sin_phi)
              - bilinear_sample_many(image, px - cos_phi, py - sin_phi))
    grad_v = (bilinear_sample_many(image, px - sin_phi, py + cos_phi)
              - bilinear_sample_many(image, px + sin_phi, py - cos_phi))
    magnitude = np.hypot(grad_u, grad_v)
    theta = np.degrees(np.arctan2(grad_v, grad_u)) % 360.0
    weight = np.exp(-(u ** 2 + v ** 2) / (2.0 * DESCRIPTOR_WEIGHT_SIGMA ** 2))
    contribution = (weight * magnitude).ravel()

    row = ((v + DESCRIPTOR_GRID / 2.0) / samples_per_cell - 0.5).ravel()
    col = ((u + DESCRIPTOR_GRID / 2.0) / samples_per_cell - 0.5).ravel()
    obin = (theta * DESCRIPTOR_BINS / 360.0).ravel()
    row0, col0, obin0 = np.floor(row), np.floor(col), np.floor(obin)
    row_frac, col_frac, obin_frac = row - row0, col - col0, obin - obin0
    row0 = row0.astype(np.intp)
    col0 = col0.astype(np.intp)
    obin0 = obin0.astype(np.intp)

    # padded by one cell on each spatial side; interpolation may spill there
    hist = np.zeros((DESCRIPTOR_CELLS + 2, DESCRIPTOR_CELLS + 2, DESCRIPTOR_BINS))
    for d_row, w_row in ((0, 1.0 - row_frac), (1, row_frac)):
        for d_col, w_col in ((0, 1.0 - col_frac), (1, col_frac)):
            for d_bin, w_bin in ((0, 1.0 - obin_frac), (1, obin_frac)):
                np.add.at(hist,
                          (row0 + 1 + d_row, col0 + 1 + d_col, (obin0 + d_bin) % DESCRIPTOR_BINS),
                          contribution * w_row * w_col * w_bin)

    raw = hist[1:-1, 1:-1, :].ravel()
    norm = np.linalg.norm(raw)
    if norm < 1e-12:
        return None
    clamped = np.minimum(raw / norm, DESCRIPTOR_CLAMP)
    return Descriptor128(clamped / np.linalg.norm(clamped))


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------

def sort_features(features: Sequence[Feature]) -> List[Feature]:
    """Deterministic order (octave, level, y, x, orientation) with exact duplicates dropped"""
    ordered = sorted(features, key=lambda feature: feature[0].sort_key)
    seen = set()
    unique = []
    for keypoint, descriptor in ordered:
        key = (keypoint.x, keypoint.y, keypoint.sigma, keypoint.orientation)
        if key in seen:
            continue
        seen.add(key)
        unique.append((keypoint, descriptor))
    return unique


def detect_and_describe(img: GrayImage,
                        pyramid_params: PyramidParams = PyramidParams(),
                        detector_params: DetectorParams = DetectorParams()) -> List[Feature]:
    """
    Full pipeline: pyramids, extrema, refinement, orientations, descriptors

    Args:
        img: Input image (at least min_dimension on both axes)
        pyramid_params: Scale-space parameters
        detector_params: Detector thresholds

    Returns:
        (keypoint, descriptor) pairs in deterministic order
    """
    gp = build_gaussian_pyramid(img, pyramid_params)
    dog = build_dog_pyramid(gp)
    extrema = detect_extrema(dog)

    prefilter = detector_params.prefilter_ratio * detector_params.contrast_threshold
    refined = rejected = 0
    features = []
    for extremum in extrema:
        sample = dog.octaves[extremum.octave][extremum.level, extremum.iy, extremum.ix]
        if abs(sample) < prefilter:
            continue
        keypoint = refine_keypoint(dog, extremum, detector_params)
        if keypoint is None or not (0.0 <= keypoint.x <= img.width - 1 and 0.0 <= keypoint.y <= img.height - 1):
            rejected += 1
            continue
        refined += 1
        for oriented in assign_orientations(gp, keypoint, detector_params):
            descriptor = compute_descriptor(gp, oriented)
            if descriptor is not None:
                features.append((oriented, descriptor))

    features = sort_features(features)
    logger.debug(f"Keypoints: {len(extrema)} extrema, {refined} refined, {rejected} rejected, "
                 f"{len(features)} described")
    return features
