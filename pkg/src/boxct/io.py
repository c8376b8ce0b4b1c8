"""File formats: GTM1 binary arrays, CSV arrays, PGM/PNG rasters, JSON sidecars.

GTM1 layout (little-endian)::

    0   4s  magic  b"GTM1"
    4   u4  kind   1 image, 2 sinogram, 3 gram filter
    8   u8  rows
    16  u8  cols
    24  f8  spacing (lambda_x for images and filters, lambda_y for sinograms)
    32  rows*cols float64, row-major
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"GTM1"
HEADER = struct.Struct("<4sIQQd")
KIND_IMAGE, KIND_SINOGRAM, KIND_GRAM = 1, 2, 3
KIND_NAMES = {KIND_IMAGE: "image", KIND_SINOGRAM: "sinogram", KIND_GRAM: "gram"}


class FormatError(ValueError):
    pass


def write_gtm(path, array: np.ndarray, kind: int, spacing: float = 1.0) -> None:
    a = np.ascontiguousarray(array, dtype="<f8")
    if a.ndim != 2:
        raise ValueError("GTM1 stores 2-D arrays only")
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, kind, a.shape[0], a.shape[1], float(spacing)))
        fh.write(a.tobytes())


def read_gtm(path, expect_kind: int | None = None):
    """Return ``(array, kind, spacing)``; raises FormatError with a reason on bad input."""
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.size:
        raise FormatError(f"{path}: {len(raw)} bytes is shorter than the 32-byte header")
    magic, kind, rows, cols, spacing = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if kind not in KIND_NAMES:
        raise FormatError(f"{path}: unknown kind {kind}")
    if expect_kind is not None and kind != expect_kind:
        raise FormatError(f"{path}: holds a {KIND_NAMES[kind]}, expected a {KIND_NAMES[expect_kind]}")
    payload = len(raw) - HEADER.size
    if payload != rows * cols * 8:
        raise FormatError(
            f"{path}: payload is {payload} bytes, header promises {rows}x{cols} doubles"
        )
    if not (np.isfinite(spacing) and spacing > 0):
        raise FormatError(f"{path}: invalid spacing {spacing}")
    a = np.frombuffer(raw, dtype="<f8", offset=HEADER.size).reshape(rows, cols).astype(np.float64)
    if not np.all(np.isfinite(a)):
        raise FormatError(f"{path}: payload contains non-finite values")
    return a, kind, spacing


def write_csv(path, array: np.ndarray) -> None:
    np.savetxt(path, np.atleast_2d(array), delimiter=",", fmt="%.17g")


def read_csv(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=np.float64))


def _pgm_tokens(raw: bytes):
    pos = 0
    tokens = []
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated PGM header")
        tokens.append(raw[start:pos])
    return tokens, pos + 1


def read_pgm(path):
    """Read a binary (P5) or ASCII (P2) PGM; returns ``(array, maxval)``."""
    raw = Path(path).read_bytes()
    tokens, offset = _pgm_tokens(raw)
    magic = tokens[0]
    width, height, maxval = (int(t) for t in tokens[1:])
    if not 0 < maxval < 65536:
        raise FormatError(f"{path}: unsupported PGM maxval {maxval}")
    if magic == b"P5":
        dtype = ">u2" if maxval > 255 else "u1"
        count = width * height
        data = np.frombuffer(raw, dtype=dtype, count=count, offset=offset)
    elif magic == b"P2":
        data = np.array(raw[offset:].split(), dtype=np.int64)[: width * height]
    else:
        raise FormatError(f"{path}: not a PGM file (magic {magic!r})")
    if data.size != width * height:
        raise FormatError(f"{path}: truncated PGM data")
    return data.reshape(height, width).astype(np.float64), maxval


def write_pgm(path, values: np.ndarray) -> dict:
    """Write an 8-bit preview scaled to the data range; returns the scaling record."""
    v = np.asarray(values, dtype=np.float64)
    lo, hi = float(v.min()), float(v.max())
    span = hi - lo if hi > lo else 1.0
    pix = np.round(255.0 * (v - lo) / span).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{v.shape[1]} {v.shape[0]}\n255\n".encode())
        fh.write(pix.tobytes())
    return {"min": lo, "max": hi}


def read_raster(path):
    """Grayscale raster as float array plus the full-scale value of its bit depth."""
    p = Path(path)
    head = p.read_bytes()[:8]
    if head[:2] in (b"P5", b"P2"):
        return read_pgm(p)
    if head == b"\x89PNG\r\n\x1a\n":
        from PIL import Image as PILImage

        with PILImage.open(p) as im:
            if im.mode == "L":
                return np.asarray(im, dtype=np.float64), 255
            if im.mode in ("I;16", "I;16B", "I;16L", "I"):
                return np.asarray(im, dtype=np.float64), 65535
            raise FormatError(f"{path}: PNG mode {im.mode} is not 8/16-bit grayscale")
    raise FormatError(f"{path}: unsupported raster format (need PGM or PNG)")


def write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2))
