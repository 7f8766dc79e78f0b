"""Planar image arrays and basic geometry operations.

Images are numpy float64 arrays of shape (channels, height, width), one
contiguous plane per channel, with channels equal to 1 (grayscale) or
3 (RGB). Values are nominally in [0, 1] after loading.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "LUMA_WEIGHTS",
    "Region",
    "as_image",
    "validate_image",
    "downsample",
    "rgb_to_gray",
    "extract_region",
    "resize_to",
]

#: BT.601 luma weights used for RGB to grayscale conversion.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


def validate_image(img, name="image"):
    """Raise ValueError unless ``img`` is a valid planar image array."""
    if not isinstance(img, np.ndarray) or img.ndim != 3:
        raise ValueError(f"{name} must be a 3D (channels, height, width) array")
    c, h, w = img.shape
    if c not in (1, 3):
        raise ValueError(f"{name} must have 1 or 3 channels, got {c}")
    if h < 1 or w < 1:
        raise ValueError(f"{name} spatial dims must be at least 1x1, got {h}x{w}")
    if not np.all(np.isfinite(img)):
        raise ValueError(f"{name} contains NaN or Inf values")


def as_image(data):
    """Coerce array-like data to the planar image layout.

    Parameters
    ----------
    data : array_like
        2D (height, width) or 3D (channels, height, width) array.

    Returns
    -------
    numpy.ndarray
        C-contiguous float64 array of shape (channels, height, width).
    """
    arr = np.ascontiguousarray(np.asarray(data, dtype=np.float64))
    if arr.ndim == 2:
        arr = arr[np.newaxis]
    validate_image(arr)
    return arr


@dataclass(frozen=True)
class Region:
    """Rectangular sub-window of an image, in pixel coordinates."""

    top: int
    left: int
    height: int
    width: int

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ValueError("region height and width must be at least 1")
        if self.top < 0 or self.left < 0:
            raise ValueError("region top and left must be non-negative")

    def validate_within(self, img):
        """Raise ValueError if the region is not fully inside ``img``."""
        _, h, w = img.shape
        if self.top + self.height > h or self.left + self.width > w:
            raise ValueError(
                f"region {self.top},{self.left},{self.height},{self.width} "
                f"exceeds image bounds {h}x{w}"
            )


def downsample(img, factor):
    """Reduce spatial size by integer box averaging.

    Each output pixel is the arithmetic mean of its factor x factor source
    block. Trailing rows/columns that do not fill a complete block are
    dropped.
    """
    img = as_image(img)
    factor = int(factor)
    if factor < 1:
        raise ValueError("downsample factor must be a positive integer")
    c, h, w = img.shape
    if factor > h or factor > w:
        raise ValueError(
            f"downsample factor {factor} larger than image dimension {h}x{w}"
        )
    if factor == 1:
        return img.copy()
    ht, wt = h // factor, w // factor
    trimmed = img[:, : ht * factor, : wt * factor]
    return trimmed.reshape(c, ht, factor, wt, factor).mean(axis=(2, 4))


def rgb_to_gray(img):
    """Collapse an RGB image to one channel with BT.601 luma weights."""
    img = as_image(img)
    if img.shape[0] != 3:
        raise ValueError(f"rgb_to_gray requires 3 channels, got {img.shape[0]}")
    wr, wg, wb = LUMA_WEIGHTS
    gray = wr * img[0] + wg * img[1] + wb * img[2]
    return gray[np.newaxis]


def extract_region(img, region):
    """Copy the pixels of ``region`` out of ``img``."""
    img = as_image(img)
    region.validate_within(img)
    t, l = region.top, region.left
    return img[:, t : t + region.height, l : l + region.width].copy()


def _sample_coords(n_src, n_dst):
    # Endpoint-aligned sample grid; a single output sample falls at the
    # source center so constant images stay constant.
    if n_dst == 1:
        return np.array([0.5 * (n_src - 1)])
    return np.arange(n_dst) * ((n_src - 1) / (n_dst - 1))


def resize_to(img, height, width):
    """Bilinear resample to ``height`` x ``width`` with edge clamping."""
    img = as_image(img)
    height, width = int(height), int(width)
    if height < 1 or width < 1:
        raise ValueError("target dimensions must be at least 1x1")
    c, h, w = img.shape
    ys = _sample_coords(h, height)
    xs = _sample_coords(w, width)
    y0 = np.clip(np.floor(ys).astype(int), 0, h - 1)
    x0 = np.clip(np.floor(xs).astype(int), 0, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, np.newaxis]
    wx = (xs - x0)[np.newaxis, :]
    out = np.empty((c, height, width))
    for k in range(c):
        plane = img[k]
        top = plane[np.ix_(y0, x0)] * (1 - wx) + plane[np.ix_(y0, x1)] * wx
        bot = plane[np.ix_(y1, x0)] * (1 - wx) + plane[np.ix_(y1, x1)] * wx
        out[k] = top * (1 - wy) + bot * wy
    return out
