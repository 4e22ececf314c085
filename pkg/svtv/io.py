"""Image and sinogram files.

Two formats are supported:

- `raw_f64`: the magic `SVTVIMG1`, the height and width as little-endian
  u32, then the pixels as little-endian f64 in row-major order. Lossless;
  also used for sinograms (one row per angle).
- `pgm16`: binary 16-bit PGM (P5). Pixels are clamped to [0, 1] and scaled to
  65535.
"""

import re
import struct
from enum import Enum
from pathlib import Path
from typing import Union

import numpy as np
from numpy.typing import ArrayLike

from svtv.errors import ImageFormatError, ShapeError

RAW_MAGIC = b"SVTVIMG1"
RAW_HEADER = struct.Struct("<8sII")
PGM_MAXVAL = 65535


class ImageFormat(Enum):
    PGM16 = "pgm16"
    RAW_F64 = "raw_f64"


class Direction(Enum):
    READ = "read"
    WRITE = "write"


def infer_format(path) -> ImageFormat:
    if Path(path).suffix.lower() == ".pgm":
        return ImageFormat.PGM16
    return ImageFormat.RAW_F64


def _as_2d(img: ArrayLike, shape: Union[tuple, None]) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if shape is not None:
        if img.size != shape[0] * shape[1]:
            raise ShapeError(
                f"Cannot write {img.size} pixels as an image of shape {shape}."
            )
        img = img.reshape(shape)
    if img.ndim != 2:
        raise ShapeError("Images must be written as 2D arrays or with a shape.")
    return img


def write_raw(path, img: ArrayLike, shape: Union[tuple, None] = None) -> None:
    img = _as_2d(img, shape)
    h, w = img.shape
    with open(path, "wb") as f:
        f.write(RAW_HEADER.pack(RAW_MAGIC, h, w))
        f.write(img.astype("<f8").tobytes())


def read_raw(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < RAW_HEADER.size:
        raise ImageFormatError(f"{path}: truncated header.")
    magic, h, w = RAW_HEADER.unpack(raw[: RAW_HEADER.size])
    if magic != RAW_MAGIC:
        raise ImageFormatError(f"{path}: bad magic {magic!r}.")
    expected = RAW_HEADER.size + 8 * h * w
    if len(raw) != expected:
        raise ImageFormatError(
            f"{path}: header declares {h}x{w} pixels ({expected} bytes), "
            f"file has {len(raw)} bytes."
        )
    data = np.frombuffer(raw, dtype="<f8", count=h * w, offset=RAW_HEADER.size)
    return data.astype(np.float64).reshape(h, w)


def write_pgm(path, img: ArrayLike, shape: Union[tuple, None] = None) -> None:
    img = _as_2d(img, shape)
    h, w = img.shape
    levels = np.round(np.clip(img, 0.0, 1.0) * PGM_MAXVAL).astype(">u2")
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n{PGM_MAXVAL}\n".encode("ascii"))
        f.write(levels.tobytes())


_PGM_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n)*([0-9]+|P5)")


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    tokens = []
    pos = 0
    for _ in range(4):
        match = _PGM_TOKEN.match(raw, pos)
        if match is None:
            raise ImageFormatError(f"{path}: malformed PGM header.")
        tokens.append(match.group(1))
        pos = match.end()
    if tokens[0] != b"P5" or not all(t.isdigit() for t in tokens[1:]):
        raise ImageFormatError(f"{path}: not a binary PGM (P5) file.")
    if pos >= len(raw) or not raw[pos : pos + 1].isspace():
        raise ImageFormatError(f"{path}: malformed PGM header.")
    pos += 1
    w, h, maxval = (int(t) for t in tokens[1:])
    if not 0 < maxval <= PGM_MAXVAL:
        raise ImageFormatError(f"{path}: invalid maximum value {maxval}.")
    dtype = ">u2" if maxval > 255 else "u1"
    itemsize = np.dtype(dtype).itemsize
    if len(raw) - pos != h * w * itemsize:
        raise ImageFormatError(
            f"{path}: header declares {h}x{w} pixels, file holds "
            f"{len(raw) - pos} data bytes."
        )
    data = np.frombuffer(raw, dtype=dtype, count=h * w, offset=pos)
    return data.astype(np.float64).reshape(h, w) / maxval


def read_image(path, fmt: Union[ImageFormat, str, None] = None) -> np.ndarray:
    """Read an image (or sinogram) as a 2D float64 array."""
    fmt = infer_format(path) if fmt is None else ImageFormat(fmt)
    if fmt == ImageFormat.PGM16:
        return read_pgm(path)
    return read_raw(path)


def write_image(
    path,
    img: ArrayLike,
    shape: Union[tuple, None] = None,
    fmt: Union[ImageFormat, str, None] = None,
) -> None:
    """Write an image (or sinogram) given as a 2D array or a flat vector and
    its shape."""
    fmt = infer_format(path) if fmt is None else ImageFormat(fmt)
    if fmt == ImageFormat.PGM16:
        write_pgm(path, img, shape)
    else:
        write_raw(path, img, shape)


def image_io(
    path,
    direction: Union[Direction, str],
    fmt: Union[ImageFormat, str, None] = None,
    img: Union[ArrayLike, None] = None,
    shape: Union[tuple, None] = None,
) -> np.ndarray:
    """Read or write an image file.

    Parameters
    ----------
    path : str or Path
        The file.
    direction : Union[Direction, str]
        `read` or `write`.
    fmt : Union[ImageFormat, str, None], default=None
        `pgm16` or `raw_f64`; inferred from the suffix when None.
    img : ArrayLike, optional
        Image to write.
    shape : tuple, optional
        Shape of a flat image to write.

    Returns
    -------
    np.ndarray
        The image read, or the image written as a 2D array.
    """
    if Direction(direction) == Direction.READ:
        return read_image(path, fmt)
    if img is None:
        raise ValueError("An image is required to write.")
    write_image(path, img, shape, fmt)
    return _as_2d(img, shape)
