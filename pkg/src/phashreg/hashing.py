"""64-bit perceptual hashes, Hamming distances, and similarity scores.

The hash pipeline is fixed so that identical pixel data always yields an
identical hash, on any machine:

1. convert to luminance with integer BT.601 weights,
2. resize to 32x32 with bilinear sampling,
3. apply a 2D DCT-II (raw basis, no per-row normalization -- a global
   scale factor cannot change the output because step 4 is median-relative),
4. take the top-left 8x8 coefficient block, compute the median of those 64
   values, and emit bit 1 where a coefficient is strictly greater.

Bit layout: coefficient ``i`` in row-major order of the 8x8 block maps to
bit ``63 - i`` of the hash value, so the DC coefficient is the most
significant bit and the canonical hex rendering reads the block top-left
to bottom-right.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from functools import cache
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import InvalidImageError

HASH_BITS = 64

_RESIZE_TARGET = 32
_BLOCK_SIZE = 8


@dataclass(frozen=True, slots=True)
class PerceptualHash:
    """A 64-bit similarity-preserving image fingerprint."""

    bits: int

    def __post_init__(self) -> None:
        if not 0 <= self.bits < 1 << 64:
            raise ValueError(f"hash value out of 64-bit range: {self.bits}")

    @property
    def hex(self) -> str:
        """Canonical rendering: 16 uppercase hex digits, most significant first."""
        return f"{self.bits:016X}"

    @classmethod
    def from_hex(cls, text: str) -> "PerceptualHash":
        """Parse a 16-hex-digit string (case-insensitive)."""
        if len(text) != 16:
            raise ValueError(f"expected 16 hex digits, got {len(text)}: {text!r}")
        try:
            return cls(int(text, 16))
        except ValueError as exc:
            raise ValueError(f"not a hex string: {text!r}") from exc

    def __str__(self) -> str:
        return self.hex

    def __index__(self) -> int:
        return self.bits


@dataclass(frozen=True, slots=True)
class SimilarityScore:
    """Normalized match percentage, reported to two decimal places."""

    percent: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.percent <= 100.0:
            raise ValueError(f"score out of range: {self.percent}")

    def __str__(self) -> str:
        return f"{self.percent:.2f}"


@dataclass(frozen=True)
class GrayImage:
    """Luminance raster: 2D float64 array, values in [0, 255], row-major."""

    samples: np.ndarray

    def __post_init__(self) -> None:
        if self.samples.ndim != 2:
            raise InvalidImageError(f"expected 2D samples, got shape {self.samples.shape}")
        if self.samples.shape[0] < 1 or self.samples.shape[1] < 1:
            raise InvalidImageError(f"zero-dimension image: {self.samples.shape}")

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]


def to_grayscale(image: Image.Image) -> GrayImage:
    """Convert a decoded PIL image to luminance.

    RGB channels are combined with integer BT.601 weights,
    ``(299*R + 587*G + 114*B + 500) // 1000``; an alpha channel is ignored.
    """
    if image.width < 1 or image.height < 1:
        raise InvalidImageError(f"zero-dimension image: {image.size}")
    if image.mode == "L":
        return GrayImage(np.asarray(image, dtype=np.float64))
    if image.mode not in ("RGB", "RGBA"):
        image = image.convert("RGB")
    arr = np.asarray(image, dtype=np.int64)[:, :, :3]
    luma = (299 * arr[:, :, 0] + 587 * arr[:, :, 1] + 114 * arr[:, :, 2] + 500) // 1000
    return GrayImage(luma.astype(np.float64))


def resize_bilinear(gray: GrayImage, width: int, height: int) -> GrayImage:
    """Resample to ``width`` x ``height`` with bilinear interpolation.

    Output pixel centers map to source coordinates ``(i + 0.5) * src/dst - 0.5``,
    clamped at the borders.
    """
    src = gray.samples
    h, w = src.shape

    sy = (np.arange(height, dtype=np.float64) + 0.5) * (h / height) - 0.5
    sx = (np.arange(width, dtype=np.float64) + 0.5) * (w / width) - 0.5
    sy = np.clip(sy, 0.0, h - 1.0)
    sx = np.clip(sx, 0.0, w - 1.0)

    y0 = np.floor(sy).astype(np.int64)
    x0 = np.floor(sx).astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (sy - y0)[:, None]
    fx = (sx - x0)[None, :]

    out = (
        src[np.ix_(y0, x0)] * (1.0 - fy) * (1.0 - fx)
        + src[np.ix_(y1, x0)] * fy * (1.0 - fx)
        + src[np.ix_(y0, x1)] * (1.0 - fy) * fx
        + src[np.ix_(y1, x1)] * fy * fx
    )
    return GrayImage(out)


@cache
def _dct_basis(n: int) -> np.ndarray:
    """Raw DCT-II basis matrix: C[k, x] = cos(pi * (2x + 1) * k / (2n))."""
    k = np.arange(n, dtype=np.float64).reshape(-1, 1)
    x = np.arange(n, dtype=np.float64).reshape(1, -1)
    return np.cos((math.pi / n) * (x + 0.5) * k)


def dct2(samples: np.ndarray) -> np.ndarray:
    """2D DCT-II of a square array, unnormalized."""
    c = _dct_basis(samples.shape[0])
    return c @ samples @ c.T


def phash_from_gray(gray: GrayImage) -> PerceptualHash:
    """Run the resize/DCT/median pipeline on a luminance raster."""
    small = resize_bilinear(gray, _RESIZE_TARGET, _RESIZE_TARGET)
    coeffs = dct2(small.samples)
    block = coeffs[:_BLOCK_SIZE, :_BLOCK_SIZE].ravel()
    median = np.median(block)
    bits = block > median
    value = int.from_bytes(np.packbits(bits).tobytes(), "big")
    return PerceptualHash(value)


def compute_phash(image: Image.Image) -> PerceptualHash:
    """Compute the 64-bit perceptual hash of a decoded raster image."""
    return phash_from_gray(to_grayscale(image))


def hash_image_bytes(data: bytes) -> PerceptualHash:
    """Decode PNG/JPEG bytes and hash them."""
    try:
        with Image.open(io.BytesIO(data)) as img:
            img.load()
            return compute_phash(img)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise InvalidImageError(f"cannot decode image: {exc}") from exc


def hash_image_file(path: str | Path) -> PerceptualHash:
    """Decode an image file and hash it."""
    try:
        with Image.open(path) as img:
            img.load()
            return compute_phash(img)
    except FileNotFoundError:
        raise
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise InvalidImageError(f"cannot decode image {path}: {exc}") from exc


def hamming_distance(a: PerceptualHash | int, b: PerceptualHash | int) -> int:
    """Number of differing bit positions between two hashes."""
    return (int(a) ^ int(b)).bit_count()


def similarity_score(distance: int) -> SimilarityScore:
    """Match percentage for a Hamming distance: (1 - d/64) * 100.

    Exact in float arithmetic (the divisor is a power of two), then rounded
    to two decimals.
    """
    if not 0 <= distance <= HASH_BITS:
        raise ValueError(f"distance out of range [0, {HASH_BITS}]: {distance}")
    return SimilarityScore(round((HASH_BITS - distance) * 100 / HASH_BITS, 2))
