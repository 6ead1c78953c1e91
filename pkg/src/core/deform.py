"""
Parametric image deformations (rotation, scaling, fish-eye, motion blur) for sift-bench
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from core.errors import ArgumentError, DeformationSpecError
from core.image import GrayImage, bilinear_sample_many

logger = logging.getLogger(__name__)

ROTATION = "rotation"
SCALING = "scaling"
FISHEYE = "fisheye"
MOTION_BLUR = "motion_blur"

SPEC_PREFIXES = {"rot": ROTATION, "scale": SCALING, "fisheye": FISHEYE, "blur": MOTION_BLUR}
KIND_PREFIXES = {kind: prefix for prefix, kind in SPEC_PREFIXES.items()}

SPEC_GRAMMAR = (
    "rot:<degrees> | scale:<factor > 0> | fisheye:<strength >= 0> | "
    "blur:<length >= 1>[@<degrees>]"
)

# tolerance for inverse-mapped coordinates landing just outside the source
_EDGE_EPS = 1e-6


@dataclass(frozen=True)
class Deformation:
    """One deformation; parameter is degrees, factor, strength or length depending on kind"""

    kind: str
    parameter: float
    angle_aux: float = 0.0

    def __post_init__(self):
        if self.kind not in KIND_PREFIXES:
            raise ArgumentError(f"unknown deformation kind '{self.kind}'")
        if not (math.isfinite(self.parameter) and math.isfinite(self.angle_aux)):
            raise ArgumentError("deformation parameters must be finite")
        if self.kind == SCALING and self.parameter <= 0:
            raise ArgumentError(f"scale factor must be > 0, got {self.parameter:g}")
        if self.kind == FISHEYE and self.parameter < 0:
            raise ArgumentError(f"fish-eye strength must be >= 0, got {self.parameter:g}")
        if self.kind == MOTION_BLUR and (self.parameter != int(self.parameter) or self.parameter < 1):
            raise ArgumentError(f"blur length must be an integer >= 1, got {self.parameter:g}")

    @property
    def spec(self) -> str:
        """Spec string that parses back to this deformation"""
        text = f"{KIND_PREFIXES[self.kind]}:{self.parameter:g}"
        if self.kind == MOTION_BLUR and self.angle_aux != 0:
            text += f"@{self.angle_aux:g}"
        return text

    @property
    def slug(self) -> str:
        """Filesystem-friendly form of spec, e.g. rot_90 or blur_30_at_45"""
        return self.spec.replace(":", "_").replace("@", "_at_")

    @property
    def is_identity(self) -> bool:
        if self.kind == ROTATION:
            return self.parameter % 360.0 == 0.0
        if self.kind == SCALING:
            return self.parameter == 1.0
        if self.kind == FISHEYE:
            return self.parameter == 0.0
        return self.parameter == 1.0


def _parse_number(token: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise DeformationSpecError(token, "not a number")
    if not math.isfinite(value):
        raise DeformationSpecError(token, "not a finite number")
    return value


def parse_deformation(text: str) -> Deformation:
    """
    Parse a deformation spec string

    Args:
        text: e.g. rot:90, scale:2.0, fisheye:1.0, blur:30 or blur:30@45

    Returns:
        Deformation

    Raises:
        DeformationSpecError: the message names the offending token
    """
    text = text.strip()
    prefix, sep, value = text.partition(":")
    if not sep or not value:
        raise DeformationSpecError(text, f"expected {SPEC_GRAMMAR}")
    if prefix not in SPEC_PREFIXES:
        raise DeformationSpecError(prefix, "unknown kind, expected rot, scale, fisheye or blur")
    kind = SPEC_PREFIXES[prefix]

    angle = 0.0
    if "@" in value:
        if kind != MOTION_BLUR:
            raise DeformationSpecError(value, "only blur takes an @angle")
        value, _, angle_text = value.partition("@")
        angle = _parse_number(angle_text)
    parameter = _parse_number(value)

    try:
        return Deformation(kind=kind, parameter=parameter, angle_aux=angle)
    except ArgumentError as e:
        raise DeformationSpecError(value, str(e))


# ---------------------------------------------------------------------------
# Deformations
# ---------------------------------------------------------------------------

def rotate(img: GrayImage, theta: float) -> GrayImage:
    """
    Rotate about the image centre onto the bounding box of the rotated rectangle

    Pixels whose source falls outside the input are 0. With y pointing down,
    a positive angle turns content clockwise on screen: for theta = 90 input
    pixel (x, y) lands at (h - 1 - y, x).
    """
    theta = theta % 360.0
    radians = math.radians(theta)
    cos_t, sin_t = math.cos(radians), math.sin(radians)
    width, height = img.width, img.height

    span_x = (width - 1) * abs(cos_t) + (height - 1) * abs(sin_t)
    span_y = (width - 1) * abs(sin_t) + (height - 1) * abs(cos_t)
    out_w = int(math.ceil(span_x - 1e-9)) + 1
    out_h = int(math.ceil(span_y - 1e-9)) + 1

    grid_x, grid_y = np.meshgrid(np.arange(out_w, dtype=np.float64), np.arange(out_h, dtype=np.float64))
    dx = grid_x - (out_w - 1) / 2.0
    dy = grid_y - (out_h - 1) / 2.0
    src_x = cos_t * dx + sin_t * dy + (width - 1) / 2.0
    src_y = -sin_t * dx + cos_t * dy + (height - 1) / 2.0

    inside = ((src_x >= -_EDGE_EPS) & (src_x <= width - 1 + _EDGE_EPS)
              & (src_y >= -_EDGE_EPS) & (src_y <= height - 1 + _EDGE_EPS))
    values = bilinear_sample_many(img, src_x, src_y)
    return GrayImage(np.where(inside, values, 0.0))


def scale(img: GrayImage, alpha: float) -> GrayImage:
    """Resize to round(alpha*w) x round(alpha*h) with x_src = (x + 0.5) / alpha - 0.5"""
    if not (math.isfinite(alpha) and alpha > 0):
        raise ArgumentError(f"scale factor must be > 0, got {alpha}")
    out_w = int(math.floor(alpha * img.width + 0.5))
    out_h = int(math.floor(alpha * img.height + 0.5))
    if out_w < 1 or out_h < 1:
        raise ArgumentError(f"scaling {img.width}x{img.height} by {alpha:g} gives an empty image")

    xs = (np.arange(out_w) + 0.5) / alpha - 0.5
    ys = (np.arange(out_h) + 0.5) / alpha - 0.5
    grid_x, grid_y = np.meshgrid(xs, ys)
    return GrayImage(bilinear_sample_many(img, grid_x, grid_y))


def fisheye_radius(rho, beta: float):
    """Source radius for normalized output radius rho: rho * (1 + beta * rho^2) / (1 + beta)"""
    return rho * (1.0 + beta * rho * rho) / (1.0 + beta)


def fisheye(img: GrayImage, beta: float) -> GrayImage:
    """
    Radial warp magnifying the centre; the centre and the circle through the corners stay fixed

    Radii are normalized by half the diagonal (the distance from the centre
    to a corner pixel centre).
    """
    if not (math.isfinite(beta) and beta >= 0):
        raise ArgumentError(f"fish-eye strength must be >= 0, got {beta}")
    cx, cy = (img.width - 1) / 2.0, (img.height - 1) / 2.0
    radius = 0.5 * math.hypot(img.width - 1, img.height - 1)
    if radius == 0:
        return GrayImage(img.pixels)

    grid_x, grid_y = np.meshgrid(np.arange(img.width, dtype=np.float64), np.arange(img.height, dtype=np.float64))
    dx, dy = grid_x - cx, grid_y - cy
    rho = np.hypot(dx, dy) / radius
    gain = (1.0 + beta * rho * rho) / (1.0 + beta)
    return GrayImage(bilinear_sample_many(img, cx + dx * gain, cy + dy * gain))


def motion_blur(img: GrayImage, length: int, angle: float = 0.0) -> GrayImage:
    """Average of `length` bilinear samples evenly spaced along a centred segment at `angle` degrees"""
    if length != int(length) or length < 1:
        raise ArgumentError(f"blur length must be an integer >= 1, got {length}")
    length = int(length)
    radians = math.radians(angle)
    step_x, step_y = math.cos(radians), math.sin(radians)

    grid_x, grid_y = np.meshgrid(np.arange(img.width, dtype=np.float64), np.arange(img.height, dtype=np.float64))
    total = np.zeros(img.shape)
    for k in range(length):
        t = k - (length - 1) / 2.0
        total += bilinear_sample_many(img, grid_x + t * step_x, grid_y + t * step_y)
    return GrayImage(total / length)


def apply_deformation(img: GrayImage, deformation: Deformation) -> GrayImage:
    if deformation.kind == ROTATION:
        result = rotate(img, deformation.parameter)
    elif deformation.kind == SCALING:
        result = scale(img, deformation.parameter)
    elif deformation.kind == FISHEYE:
        result = fisheye(img, deformation.parameter)
    else:
        result = motion_blur(img, int(deformation.parameter), deformation.angle_aux)
    logger.debug(f"Applied {deformation.spec}: {img.width}x{img.height} -> {result.width}x{result.height}")
    return result
