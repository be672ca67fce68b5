"""Grayscale image I/O: binary/ASCII PGM (8 or 16 bit) and PNG.

TIFF is not supported; convert SEM TIFFs with any imaging tool first, e.g.
``PIL.Image.open("x.tif").save("x.png")``.
"""

import io
import re
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import UnsupportedFormatError

__all__ = ["read_image", "write_image"]

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _pgm_tokens(data):
    # Header fields are whitespace separated; '#' starts a comment to end of line.
    pos = 2
    tokens = []
    while len(tokens) < 3:
        m = re.compile(rb"\s*(#[^\n]*\n\s*)*(\d+)").match(data, pos)
        if m is None:
            raise UnsupportedFormatError("truncated PGM header")
        tokens.append(int(m.group(2)))
        pos = m.end()
    return tokens, pos + 1  # a single whitespace byte precedes the raster


def _read_pgm(data):
    (width, height, maxval), start = _pgm_tokens(data)
    if not 0 < maxval < 65536:
        raise UnsupportedFormatError(f"PGM maxval {maxval} out of range")
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    if data[:2] == b"P2":
        values = np.array(data[start - 1:].split(), dtype=np.int64)[: width * height]
        return values.reshape(height, width).astype(np.uint8 if maxval < 256 else np.uint16)
    count = width * height
    raster = np.frombuffer(data, dtype=dtype, count=count, offset=start)
    return raster.reshape(height, width).astype(np.uint8 if maxval < 256 else np.uint16)


def read_image(path):
    """Read a grayscale image as a ``uint8`` or ``uint16`` ``(H, W)`` array."""
    data = Path(path).read_bytes()
    if data[:2] in (b"P5", b"P2"):
        return _read_pgm(data)
    if data.startswith(_PNG_MAGIC):
        img = Image.open(io.BytesIO(data))
        arr = np.asarray(img)
        if arr.ndim != 2:
            raise UnsupportedFormatError(f"PNG is not single-channel (mode {img.mode})")
        return arr.astype(np.uint16) if arr.dtype.itemsize > 1 else arr.astype(np.uint8)
    raise UnsupportedFormatError(f"unsupported image format, magic bytes {data[:8]!r}")


def write_image(path, image):
    """Write ``uint8``/``uint16`` data; the format follows the extension (.pgm or .png)."""
    arr = np.asarray(image)
    if arr.ndim != 2:
        raise UnsupportedFormatError(f"expected a 2D grayscale image, got shape {arr.shape}")
    if arr.dtype not in (np.uint8, np.uint16):
        raise UnsupportedFormatError(f"expected uint8 or uint16 pixels, got {arr.dtype}")
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        maxval = 255 if arr.dtype == np.uint8 else 65535
        header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n{maxval}\n".encode("ascii")
        raster = arr.astype(">u2") if arr.dtype == np.uint16 else arr
        path.write_bytes(header + np.ascontiguousarray(raster).tobytes())
    elif suffix == ".png":
        Image.fromarray(np.ascontiguousarray(arr)).save(path, format="PNG")
    else:
        raise UnsupportedFormatError(f"cannot write images with extension {suffix!r}")
