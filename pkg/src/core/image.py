"""
Raster representation, decoding, resampling and convolution primitives for sift-bench
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Tuple, Union

import numpy as np
from scipy.ndimage import convolve1d

from core.errors import ArgumentError, ImageFormatError, ImageSizeError

try:
    from PIL import Image
except ImportError:  # PNG support is optional
    Image = None

logger = logging.getLogger(__name__)

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])
PGM_MAGICS = (b"P2", b"P5")

PathLike = Union[str, Path]


@dataclass(frozen=True)
class GrayImage:
    """Floating-intensity raster, row-major, indexed as pixels[y, x]"""

    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.array(self.pixels, dtype=np.float64, copy=True)
        if pixels.ndim != 2:
            raise ArgumentError(f"image must be 2-D, got shape {pixels.shape}")
        if pixels.shape[0] < 1 or pixels.shape[1] < 1:
            raise ArgumentError(f"image must be at least 1x1, got {pixels.shape[1]}x{pixels.shape[0]}")
        if not np.all(np.isfinite(pixels)):
            raise ArgumentError("image contains non-finite intensities")
        pixels.setflags(write=False)
        object.__setattr__(self, "pixels", pixels)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def shape(self) -> Tuple[int, int]:
        """(height, width), numpy order"""
        return self.pixels.shape

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.pixels, other.pixels)

    __hash__ = None


@dataclass(frozen=True)
class Kernel1D:
    """Symmetric, positive, normalized 1-D convolution kernel"""

    radius: int
    taps: np.ndarray


# ---------------------------------------------------------------------------
# Decoding / encoding
# ---------------------------------------------------------------------------

def load_image(path: PathLike) -> GrayImage:
    """
    Load a grayscale image with intensities in [0, 1]

    PGM (P2/P5, maxval up to 255) is always supported; 8-bit gray or RGB PNG
    is decoded through Pillow when it is installed. RGB is converted to luma.

    Args:
        path: Image file path

    Returns:
        Decoded image

    Raises:
        OSError: file cannot be read
        ImageFormatError: unsupported format, bit depth or truncated data
    """
    path = Path(path)
    data = path.read_bytes()
    if not data:
        raise ImageFormatError(f"{path}: empty file")

    if data[:2] in PGM_MAGICS:
        pixels = _decode_pgm(data, path)
    elif data.startswith(PNG_SIGNATURE):
        pixels = _decode_png(path)
    else:
        raise ImageFormatError(f"{path}: unsupported image format (magic {data[:2]!r})")

    logger.debug(f"Loaded {path} ({pixels.shape[1]}x{pixels.shape[0]})")
    return GrayImage(pixels)


def _pgm_header(data: bytes, path: Path) -> Tuple[list, int]:
    """Return the width/height/maxval tokens and the offset just past maxval"""
    tokens = []
    pos = 2
    size = len(data)
    while len(tokens) < 3:
        if pos >= size:
            raise ImageFormatError(f"{path}: truncated PGM header")
        byte = data[pos:pos + 1]
        if byte == b"#":
            end = data.find(b"\n", pos)
            pos = size if end < 0 else end + 1
        elif byte.isspace():
            pos += 1
        else:
            start = pos
            while pos < size and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
                pos += 1
            tokens.append(data[start:pos])
    if pos < size and not data[pos:pos + 1].isspace():
        raise ImageFormatError(f"{path}: malformed PGM header")
    return tokens, pos


def _decode_pgm(data: bytes, path: Path) -> np.ndarray:
    magic = data[:2]
    tokens, pos = _pgm_header(data, path)
    try:
        width, height, maxval = (int(token) for token in tokens)
    except ValueError:
        raise ImageFormatError(f"{path}: non-numeric PGM header field")

    if width < 1 or height < 1:
        raise ImageFormatError(f"{path}: invalid PGM dimensions {width}x{height}")
    if maxval > 255:
        raise ImageFormatError(f"{path}: 16-bit PGM (maxval {maxval}) is not supported")
    if maxval < 1:
        raise ImageFormatError(f"{path}: invalid PGM maxval {maxval}")

    count = width * height
    if magic == b"P5":
        raster = data[pos + 1:pos + 1 + count]
        if len(raster) < count:
            raise ImageFormatError(f"{path}: truncated PGM raster ({len(raster)} of {count} bytes)")
        values = np.frombuffer(raster, dtype=np.uint8)
    else:
        body = b"\n".join(line.split(b"#", 1)[0] for line in data[pos:].splitlines())
        try:
            values = np.array([int(token) for token in body.split()], dtype=np.int64)
        except ValueError:
            raise ImageFormatError(f"{path}: non-numeric sample in ASCII PGM")
        if values.size < count:
            raise ImageFormatError(f"{path}: truncated ASCII PGM ({values.size} of {count} samples)")
        values = values[:count]

    if values.size and (values.max() > maxval or values.min() < 0):
        raise ImageFormatError(f"{path}: sample exceeds maxval {maxval}")

    return values.reshape(height, width).astype(np.float64) / maxval


def _decode_png(path: Path) -> np.ndarray:
    if Image is None:
        raise ImageFormatError(f"{path}: PNG support requires Pillow")

    with Image.open(path) as im:
        mode = im.mode
        if mode in ("I", "I;16", "I;16B", "I;16L", "F"):
            raise ImageFormatError(f"{path}: unsupported PNG bit depth (mode {mode})")
        if mode == "1":
            im = im.convert("L")
        elif mode == "LA":
            im = im.getchannel("L")
        elif mode in ("P", "PA", "RGBA"):
            im = im.convert("RGB")
        elif mode not in ("L", "RGB"):
            raise ImageFormatError(f"{path}: unsupported PNG mode {mode}")
        arr = np.asarray(im, dtype=np.float64)

    if arr.ndim == 3:
        arr = arr[..., :3] @ LUMA_WEIGHTS
    return arr / 255.0


def encode_pgm(img: GrayImage) -> bytes:
    """Binary PGM (P5, maxval 255) bytes; intensities are clipped to [0, 1]"""
    raster = np.rint(np.clip(img.pixels, 0.0, 1.0) * 255.0).astype(np.uint8)
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + raster.tobytes()


def save_image(img: GrayImage, path: PathLike) -> Path:
    """
    Write an image as binary PGM (P5, maxval 255)

    Args:
        img: Image with intensities in [0, 1] (values outside are clipped)
        path: Destination file

    Returns:
        The written path
    """
    path = Path(path)
    path.write_bytes(encode_pgm(img))
    return path


def save_scaled(values: np.ndarray, path: PathLike) -> Path:
    """Write an arbitrary finite array as PGM after mapping [min, max] onto [0, 1]"""
    values = np.asarray(values, dtype=np.float64)
    low, high = float(values.min()), float(values.max())
    if high > low:
        scaled = (values - low) / (high - low)
    else:
        scaled = np.full(values.shape, 128.0 / 255.0)
    return save_image(GrayImage(scaled), path)


# ---------------------------------------------------------------------------
# Filtering and resampling
# ---------------------------------------------------------------------------

@lru_cache(maxsize=128)
def gaussian_kernel(sigma: float) -> Kernel1D:
    """
    Sampled Gaussian exp(-d^2 / (2 sigma^2)) truncated at ceil(4 sigma), normalized to sum 1

    Args:
        sigma: Blur scale, must be > 0

    Returns:
        Kernel with 2 * radius + 1 taps
    """
    try:
        sigma = float(sigma)
    except (TypeError, ValueError):
        raise ArgumentError(f"sigma must be a number, got {sigma!r}")
    if not (math.isfinite(sigma) and sigma > 0):
        raise ArgumentError(f"sigma must be a finite value > 0, got {sigma!r}")

    radius = int(math.ceil(4.0 * sigma))
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    taps = np.exp(-(offsets ** 2) / (2.0 * sigma * sigma))
    taps /= taps.sum()
    taps.setflags(write=False)
    return Kernel1D(radius=radius, taps=taps)


def convolve_separable(img: GrayImage, kernel: Kernel1D) -> GrayImage:
    """Horizontal then vertical pass with the same kernel, replicating edge pixels"""
    rows = convolve1d(img.pixels, kernel.taps, axis=1, mode="nearest")
    return GrayImage(convolve1d(rows, kernel.taps, axis=0, mode="nearest"))


def bilinear_sample_many(img: GrayImage, xs, ys) -> np.ndarray:
    """
    Vectorized bilinear interpolation with coordinates clamped to the image

    Args:
        img: Source image
        xs: x coordinates (any shape)
        ys: y coordinates (same shape as xs)

    Returns:
        Interpolated intensities, shaped like xs
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise ArgumentError("sample coordinates must be finite")

    pixels = img.pixels
    height, width = pixels.shape
    xs = np.clip(xs, 0.0, width - 1)
    ys = np.clip(ys, 0.0, height - 1)

    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, width - 1)
    y1 = np.minimum(y0 + 1, height - 1)
    fx = xs - x0
    fy = ys - y0

    top = pixels[y0, x0] * (1.0 - fx) + pixels[y0, x1] * fx
    bottom = pixels[y1, x0] * (1.0 - fx) + pixels[y1, x1] * fx
    return top * (1.0 - fy) + bottom * fy


def bilinear_sample(img: GrayImage, x: float, y: float) -> float:
    """Bilinear intensity at (x, y); out-of-bounds coordinates are clamped first"""
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ArgumentError(f"sample coordinates must be finite, got ({x}, {y})")
    return float(bilinear_sample_many(img, x, y))


def downsample2(img: GrayImage) -> GrayImage:
    """Keep every second pixel starting at (0, 0); output is floor(w/2) x floor(h/2)"""
    if img.width < 2 or img.height < 2:
        raise ImageSizeError(f"cannot downsample a {img.width}x{img.height} image")
    half_h, half_w = img.height // 2, img.width // 2
    return GrayImage(img.pixels[0:2 * half_h:2, 0:2 * half_w:2])


def upsample2(img: GrayImage) -> GrayImage:
    """2x bilinear enlargement with the pixel-centre mapping x_src = (x + 0.5) / 2 - 0.5"""
    xs = (np.arange(2 * img.width) + 0.5) / 2.0 - 0.5
    ys = (np.arange(2 * img.height) + 0.5) / 2.0 - 0.5
    grid_x, grid_y = np.meshgrid(xs, ys)
    return GrayImage(bilinear_sample_many(img, grid_x, grid_y))
