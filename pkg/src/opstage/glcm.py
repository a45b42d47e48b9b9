"""Gray-level co-occurrence matrices and the 16-component texture vector.

Statistics are computed on the probability-normalized GLCM. Entropy and
contrast weight each cell by ``h**2`` (not ``h``), and the entropy slot of
the feature vector stores the *negated* entropy, so the layout per offset is
``(energy, contrast, -entropy, inverse_variance)``.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyGlcm, EmptyImage, InvalidPixel, ValidationError

if os.environ.get("OPSTAGE_PURE"):
    from ._glcm_py import glcm_counts as _counts_kernel

    KERNEL = "python"
else:
    try:
        from ._glcm_core import glcm_counts as _counts_kernel

        KERNEL = "cython"
    except ImportError:
        from ._glcm_py import glcm_counts as _counts_kernel

        KERNEL = "python"

DEFAULT_LEVELS = 16


@dataclass(frozen=True)
class GlcmOffset:
    """Column displacement ``dx`` and row displacement ``dy``."""

    dx: int
    dy: int

    def __post_init__(self):
        if self.dx < 0 or self.dy < 0:
            raise ValidationError(f"offset components must be >= 0, got ({self.dx}, {self.dy})")
        if self.dx == 0 and self.dy == 0:
            raise ValidationError("offset (0, 0) is not allowed")


#: Offsets k=1..4 used for the feature vector, in order.
OFFSETS = (GlcmOffset(1, 0), GlcmOffset(0, 1), GlcmOffset(2, 0), GlcmOffset(1, 1))

#: Column names of the feature vector, ``f1..f16`` in CSV order.
FEATURE_NAMES = tuple(
    f"{stat}_dx{off.dx}dy{off.dy}"
    for off in OFFSETS
    for stat in ("energy", "contrast", "neg_entropy", "inverse_variance")
)


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Quantized grayscale raster.

    ``pixels`` is a ``(height, width)`` int32 array with values in
    ``[0, levels)``.
    """

    pixels: np.ndarray
    levels: int

    def __post_init__(self):
        px = np.ascontiguousarray(self.pixels, dtype=np.int32)
        if px.ndim != 2 or px.size == 0:
            raise EmptyImage("image must be a non-empty 2-D grid")
        if self.levels < 1:
            raise ValidationError("levels must be positive")
        if px.min() < 0 or px.max() >= self.levels:
            raise InvalidPixel(f"pixel values must lie in [0, {self.levels - 1}]")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True, eq=False)
class Glcm:
    levels: int
    offset: GlcmOffset
    counts: np.ndarray

    @property
    def total_pairs(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True, eq=False)
class NormalizedGlcm:
    levels: int
    offset: GlcmOffset
    probs: np.ndarray


@dataclass(frozen=True)
class TextureStats:
    energy: float
    entropy: float
    inverse_variance: float
    contrast: float


def quantize_image(raster, max_value: int, levels: int = DEFAULT_LEVELS) -> GrayImage:
    """Bin raw intensities into ``levels`` gray levels.

    Each value ``v`` maps to ``floor(v * levels / (max_value + 1))``.
    """
    arr = np.asarray(raster)
    if arr.size == 0:
        raise EmptyImage("raster is empty")
    if arr.ndim != 2:
        raise ValidationError(f"raster must be 2-D, got {arr.ndim}-D")
    if levels < 2:
        raise ValidationError("levels must be >= 2")
    if max_value < 1:
        raise ValidationError("max_value must be positive")
    arr = arr.astype(np.int64)
    if arr.min() < 0 or arr.max() > max_value:
        raise InvalidPixel(f"raster values must lie in [0, {max_value}]")
    return GrayImage(arr * levels // (max_value + 1), levels)


def compute_glcm(img: GrayImage, offset: GlcmOffset) -> Glcm:
    """Directed co-occurrence counts; ``counts[a, b]`` counts reference
    pixel ``a`` with neighbour ``b`` at ``(row + dy, col + dx)``."""
    if img.width <= offset.dx or img.height <= offset.dy:
        raise EmptyGlcm(
            f"{img.width}x{img.height} image has no pixel pairs at offset ({offset.dx}, {offset.dy})"
        )
    counts = _counts_kernel(img.pixels, img.levels, offset.dx, offset.dy)
    counts.setflags(write=False)
    return Glcm(img.levels, offset, counts)


def normalize_glcm(glcm: Glcm) -> NormalizedGlcm:
    total = glcm.total_pairs
    if total == 0:
        raise EmptyGlcm("cannot normalize a GLCM with no pairs")
    return NormalizedGlcm(glcm.levels, glcm.offset, glcm.counts / total)


def _diff_sq(levels):
    i, j = np.indices((levels, levels))
    return (i - j).astype(np.float64) ** 2


def energy(g: NormalizedGlcm) -> float:
    return float(np.sum(g.probs**2))


def entropy(g: NormalizedGlcm) -> float:
    """``-sum h**2 * ln h`` over nonzero cells."""
    h = g.probs[g.probs > 0]
    return float(-np.sum(h**2 * np.log(h)))


def inverse_variance(g: NormalizedGlcm) -> float:
    return float(np.sum(g.probs / (1.0 + _diff_sq(g.levels))))


def contrast(g: NormalizedGlcm) -> float:
    return float(np.sum(_diff_sq(g.levels) * g.probs**2))


def texture_stats(g: NormalizedGlcm) -> TextureStats:
    return TextureStats(energy(g), entropy(g), inverse_variance(g), contrast(g))


def feature_vector(img: GrayImage, offsets: Sequence[GlcmOffset] = OFFSETS) -> np.ndarray:
    """Concatenate ``(energy, contrast, -entropy, inverse_variance)`` over
    the four offsets into a length-16 float64 vector (see FEATURE_NAMES)."""
    out = []
    for off in offsets:
        stats = texture_stats(normalize_glcm(compute_glcm(img, off)))
        out.extend((stats.energy, stats.contrast, -stats.entropy, stats.inverse_variance))
    return np.array(out, dtype=np.float64)


def feature_matrix(images: Iterable[GrayImage], workers: int = 1) -> np.ndarray:
    """Stack feature vectors row by row, preserving input order.

    The compiled kernel releases the GIL, so ``workers > 1`` uses threads.
    """
    images = list(images)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(feature_vector, images))
    else:
        rows = [feature_vector(img) for img in images]
    if not rows:
        return np.empty((0, len(FEATURE_NAMES)))
    return np.vstack(rows)
