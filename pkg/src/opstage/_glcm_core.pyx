# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled co-occurrence counting kernel."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def glcm_counts(const cnp.int32_t[:, ::1] pixels, Py_ssize_t levels,
                Py_ssize_t dx, Py_ssize_t dy):
    """Directed co-occurrence counts of ``pixels`` at offset ``(dx, dy)``.

    Pixel values must already be validated to lie in ``[0, levels)``.
    """
    cdef Py_ssize_t height = pixels.shape[0]
    cdef Py_ssize_t width = pixels.shape[1]
    cdef Py_ssize_t row, col
    out = np.zeros((levels, levels), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] counts = out
    with nogil:
        for row in range(height - dy):
            for col in range(width - dx):
                counts[pixels[row, col], pixels[row + dy, col + dx]] += 1
    return out
