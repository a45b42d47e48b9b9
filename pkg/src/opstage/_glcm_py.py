"""NumPy fallback for the co-occurrence kernel, used when the compiled
extension is not built (or ``OPSTAGE_PURE=1`` is set)."""

import numpy as np


def glcm_counts(pixels, levels, dx, dy):
    height, width = pixels.shape
    ref = pixels[: height - dy, : width - dx].astype(np.int64, copy=False)
    nbr = pixels[dy:, dx:].astype(np.int64, copy=False)
    flat = np.bincount((ref * levels + nbr).ravel(), minlength=levels * levels)
    return flat.reshape(levels, levels).astype(np.int64, copy=False)
