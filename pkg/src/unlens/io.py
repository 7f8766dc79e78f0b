"""Image file input/output.

Supported containers: 8- and 16-bit PNG and TIFF (grayscale or RGB) via
OpenCV, and a raw float container for exact round trips:

LPC1 raw format
    magic bytes ``LPC1``, then three little-endian u32 values (height,
    width, channels), then ``height * width * channels`` IEEE-754 float64
    values, planar, row-major.
"""

from __future__ import annotations

import os
import struct

import cv2
import numpy as np

from .image import as_image

__all__ = [
    "RAW_MAGIC",
    "RAW_SUFFIX",
    "load_image",
    "save_image",
    "read_raw",
    "write_raw",
    "load_array",
    "read_keyvalues",
]

RAW_MAGIC = b"LPC1"
RAW_SUFFIX = ".lpc1"
_IMAGE_SUFFIXES = (".png", ".tif", ".tiff")


def load_image(path, as_float=True):
    """Read an 8- or 16-bit PNG/TIFF file as a planar image array.

    Parameters
    ----------
    path : path-like
        File to read. Grayscale or RGB only.
    as_float : bool
        When True (default), scale values to [0, 1] by dividing by the
        bit-depth maximum. When False, return the raw integer counts as
        float64 (used for raw sensor data where black-level arithmetic
        happens on counts).

    Returns
    -------
    numpy.ndarray of shape (channels, height, width), float64.
    """
    path = os.fspath(path)
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such image file: {path}")
    arr = cv2.imread(path, cv2.IMREAD_UNCHANGED)
    if arr is None:
        raise ValueError(f"unreadable image file: {path}")
    if arr.dtype == np.uint8:
        maxval = 255.0
    elif arr.dtype == np.uint16:
        maxval = 65535.0
    else:
        raise ValueError(
            f"unsupported bit depth {arr.dtype} in {path}; expected 8- or 16-bit"
        )
    if arr.ndim == 2:
        planar = arr[np.newaxis].astype(np.float64)
    elif arr.ndim == 3 and arr.shape[2] == 3:
        # OpenCV loads BGR; reorder to RGB planes.
        planar = arr[:, :, ::-1].transpose(2, 0, 1).astype(np.float64)
    elif arr.ndim == 3 and arr.shape[2] == 4:
        raise ValueError(f"unsupported channel count 4 (alpha) in {path}")
    else:
        raise ValueError(f"unsupported channel count in {path}: shape {arr.shape}")
    if as_float:
        planar /= maxval
    return np.ascontiguousarray(planar)


def save_image(img, path, bit_depth=8):
    """Write an image as PNG or TIFF at the requested bit depth.

    Values are clipped to [0, 1] and quantized with round-half-up, so a
    reload differs by at most 1 / (2^bit_depth - 1) per pixel.
    """
    img = as_image(img)
    path = os.fspath(path)
    if bit_depth == 8:
        scale, dtype = 255.0, np.uint8
    elif bit_depth == 16:
        scale, dtype = 65535.0, np.uint16
    else:
        raise ValueError(f"bit_depth must be 8 or 16, got {bit_depth}")
    suffix = os.path.splitext(path)[1].lower()
    if suffix not in _IMAGE_SUFFIXES:
        raise ValueError(
            f"unsupported output format {suffix!r}; use one of {_IMAGE_SUFFIXES}"
        )
    clipped = np.clip(img, 0.0, 1.0)
    # floor(v * scale + 0.5) rounds halves up; numpy's round would go to even.
    quant = np.floor(clipped * scale + 0.5).astype(dtype)
    if quant.shape[0] == 1:
        pixels = quant[0]
    else:
        pixels = quant[::-1].transpose(1, 2, 0)  # RGB planes to BGR interleaved
    if not cv2.imwrite(path, np.ascontiguousarray(pixels)):
        raise OSError(f"could not write image file: {path}")


def write_raw(img, path):
    """Write an image in the LPC1 raw float format (exact, no quantization)."""
    img = as_image(img)
    c, h, w = img.shape
    with open(os.fspath(path), "wb") as f:
        f.write(RAW_MAGIC)
        f.write(struct.pack("<III", h, w, c))
        f.write(img.astype("<f8").tobytes())


def read_raw(path):
    """Read an LPC1 raw float file as a planar image array."""
    path = os.fspath(path)
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such raw file: {path}")
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != RAW_MAGIC:
        raise ValueError(f"not an LPC1 raw file (bad magic): {path}")
    if len(blob) < 16:
        raise ValueError(f"truncated LPC1 header: {path}")
    h, w, c = struct.unpack("<III", blob[4:16])
    expected = 16 + h * w * c * 8
    if len(blob) != expected:
        raise ValueError(
            f"LPC1 payload size mismatch in {path}: "
            f"expected {expected} bytes, got {len(blob)}"
        )
    data = np.frombuffer(blob, dtype="<f8", offset=16).reshape(c, h, w)
    return as_image(data)


def load_array(path, as_float=True):
    """Load either an LPC1 raw file or a PNG/TIFF image by file suffix."""
    suffix = os.path.splitext(os.fspath(path))[1].lower()
    if suffix == RAW_SUFFIX:
        return read_raw(path)
    return load_image(path, as_float=as_float)


def read_keyvalues(path):
    """Parse a plain-text key-value file.

    One ``key = value`` pair per line; ``#`` starts a comment; blank lines
    are ignored. Returns a dict of stripped strings.
    """
    path = os.fspath(path)
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such key-value file: {path}")
    out = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {text!r}")
            key, value = text.split("=", 1)
            out[key.strip()] = value.strip()
    return out
