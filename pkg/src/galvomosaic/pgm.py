"""16-bit grayscale image I/O: PGM (P5, maxval 65535) and optional PNG.

Pipeline images are stored as unsigned 16-bit and processed internally
as float64 in [0, 1]; ``to_unit`` / ``to_u16`` convert between the two.
PNG support requires Pillow and is selected by the ``.png`` extension.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import GalvoMosaicError

MAXVAL = 65535


class ImageFormatError(GalvoMosaicError):
    """Unreadable or unsupported image file."""


def to_unit(img: np.ndarray) -> np.ndarray:
    """uint16 counts -> float64 intensities in [0, 1]."""
    return np.asarray(img, dtype=np.float64) / MAXVAL


def to_u16(img: np.ndarray) -> np.ndarray:
    """Float intensities -> uint16 counts, clamped to [0, 1], round half up.

    Inputs are nonnegative after the clamp, so round-half-away-from-zero
    reduces to floor(x + 0.5).
    """
    scaled = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0) * MAXVAL
    return np.floor(scaled + 0.5).astype(np.uint16)


def write_pgm(path: str | os.PathLike, img: np.ndarray) -> None:
    """Write a 2D uint16 array as binary PGM (P5), big-endian samples."""
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise ImageFormatError(f"expected a 2D array, got shape {arr.shape}")
    if arr.dtype != np.uint16:
        raise ImageFormatError(f"expected uint16 data, got {arr.dtype}")
    h, w = arr.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n{MAXVAL}\n".encode("ascii"))
        f.write(arr.astype(">u2").tobytes())


def read_pgm(path: str | os.PathLike) -> np.ndarray:
    """Read a binary PGM (P5) with maxval 65535 into a uint16 array."""
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(b"P5"):
        raise ImageFormatError(f"{path}: not a binary PGM (P5) file")

    # Header = magic, width, height, maxval as whitespace-separated tokens,
    # with '#' comments running to end of line.
    tokens: list[bytes] = []
    pos = 2
    while len(tokens) < 3 and pos < len(data):
        c = data[pos:pos + 1]
        if c == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        elif c.isspace():
            pos += 1
        else:
            end = pos
            while end < len(data) and not data[end:end + 1].isspace():
                end += 1
            tokens.append(data[pos:end])
            pos = end
    if len(tokens) < 3:
        raise ImageFormatError(f"{path}: truncated PGM header")
    try:
        w, h, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise ImageFormatError(f"{path}: malformed PGM header") from exc
    if maxval != MAXVAL:
        raise ImageFormatError(f"{path}: expected maxval {MAXVAL}, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    expected = w * h * 2
    raster = data[pos:pos + expected]
    if len(raster) != expected:
        raise ImageFormatError(
            f"{path}: raster has {len(raster)} bytes, expected {expected}"
        )
    return np.frombuffer(raster, dtype=">u2").reshape(h, w).astype(np.uint16)


def write_png(path: str | os.PathLike, img: np.ndarray) -> None:
    """Write a 2D uint16 array as 16-bit grayscale PNG (requires Pillow)."""
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover - depends on environment
        raise ImageFormatError("PNG output requires Pillow (pip install Pillow)") from exc
    arr = np.ascontiguousarray(np.asarray(img, dtype=np.uint16))
    Image.fromarray(arr).save(path)  # uint16 arrays map to 16-bit grayscale


def read_png(path: str | os.PathLike) -> np.ndarray:
    """Read a 16-bit grayscale PNG into a uint16 array (requires Pillow)."""
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover - depends on environment
        raise ImageFormatError("PNG input requires Pillow (pip install Pillow)") from exc
    with Image.open(path) as im:
        arr = np.array(im)
    if arr.ndim != 2:
        raise ImageFormatError(f"{path}: expected grayscale PNG, got shape {arr.shape}")
    return arr.astype(np.uint16)


def write_image(path: str | os.PathLike, img: np.ndarray) -> None:
    """Dispatch on extension: .png to PNG, anything else to PGM."""
    if str(path).lower().endswith(".png"):
        write_png(path, img)
    else:
        write_pgm(path, img)


def read_image(path: str | os.PathLike) -> np.ndarray:
    """Dispatch on extension: .png from PNG, anything else from PGM."""
    if str(path).lower().endswith(".png"):
        return read_png(path)
    return read_pgm(path)
