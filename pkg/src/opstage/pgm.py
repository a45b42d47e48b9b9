"""Minimal grayscale PGM reader/writer (P2 ASCII and P5 binary, 8/16-bit)."""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .errors import PgmError

_COLOR_MAGIC = {b"P3", b"P6", b"P1", b"P4", b"P7"}
_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _tokens(data: bytes, pos: int, count: int):
    out = []
    for _ in range(count):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise PgmError("truncated PGM header")
        out.append(m.group(1))
        pos = m.end()
    return out, pos


def decode_pgm(data: bytes) -> tuple[np.ndarray, int]:
    """Decode PGM bytes into ``(pixels, max_value)``.

    ``pixels`` has shape ``(height, width)`` and dtype int64.
    """
    magic = data[:2]
    if magic in _COLOR_MAGIC:
        raise PgmError(f"unsupported non-grayscale format {magic.decode()}")
    if magic not in (b"P2", b"P5"):
        raise PgmError("not a PGM file")
    try:
        (w, h, mx), pos = _tokens(data, 2, 3)
        width, height, max_value = int(w), int(h), int(mx)
    except ValueError as exc:
        raise PgmError(f"bad PGM header: {exc}") from None
    if width < 1 or height < 1:
        raise PgmError("PGM has zero size")
    if not 0 < max_value < 65536:
        raise PgmError(f"maxval {max_value} out of range")
    n = width * height

    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        pos += 1
        dtype = np.dtype(">u2") if max_value > 255 else np.dtype("u1")
        raw = data[pos : pos + n * dtype.itemsize]
        if len(raw) < n * dtype.itemsize:
            raise PgmError("truncated PGM raster")
        pixels = np.frombuffer(raw, dtype=dtype).astype(np.int64)
    else:
        body = re.sub(rb"#[^\n]*", b"", data[pos:]).split()
        if len(body) < n:
            raise PgmError("truncated PGM raster")
        try:
            pixels = np.array([int(t) for t in body[:n]], dtype=np.int64)
        except ValueError:
            raise PgmError("non-integer sample in P2 raster") from None
    if pixels.max() > max_value:
        raise PgmError("sample exceeds maxval")
    return pixels.reshape(height, width), max_value


def read_pgm(path) -> tuple[np.ndarray, int]:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise PgmError(f"{path}: {exc.strerror}") from None
    try:
        return decode_pgm(data)
    except PgmError as exc:
        raise PgmError(f"{path}: {exc}") from None


def encode_pgm(pixels, max_value: int, binary: bool = True) -> bytes:
    arr = np.asarray(pixels, dtype=np.int64)
    if arr.ndim != 2 or arr.size == 0:
        raise PgmError("pixels must be a non-empty 2-D grid")
    if not 0 < max_value < 65536 or arr.min() < 0 or arr.max() > max_value:
        raise PgmError("pixel values out of range for maxval")
    height, width = arr.shape
    header = f"{'P5' if binary else 'P2'}\n{width} {height}\n{max_value}\n".encode()
    if binary:
        dtype = ">u2" if max_value > 255 else "u1"
        return header + arr.astype(dtype).tobytes()
    rows = "\n".join(" ".join(str(v) for v in row) for row in arr)
    return header + rows.encode() + b"\n"


def write_pgm(path, pixels, max_value: int, binary: bool = True) -> None:
    Path(path).write_bytes(encode_pgm(pixels, max_value, binary))
