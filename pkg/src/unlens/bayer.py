"""Raw Bayer mosaic frames and bilinear demosaicing.

The pipeline normalizes raw counts, fills the missing color samples of each
channel by bilinear interpolation from the nearest same-color sites, then
applies white-balance gains. Known samples pass through untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .image import rgb_to_gray
from .io import load_image, read_keyvalues, read_raw

__all__ = ["PATTERNS", "BayerFrame", "demosaic", "bayer_to_gray", "load_bayer"]

#: Per-pattern (row, col) offsets of the R, G, G, B sites in each 2x2 tile.
PATTERNS = {
    "RGGB": ((0, 0), (0, 1), (1, 0), (1, 1)),
    "BGGR": ((1, 1), (0, 1), (1, 0), (0, 0)),
    "GRBG": ((0, 1), (0, 0), (1, 1), (1, 0)),
    "GBRG": ((1, 0), (0, 0), (1, 1), (0, 1)),
}

_BIT_DEPTHS = (8, 10, 12, 16)

# Tent kernel; with the site masks it averages the 2 or 4 nearest
# same-color neighbors (normalized convolution divides out the weights).
_KERNEL = np.array([[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]]) / 4.0


@dataclass(frozen=True)
class BayerFrame:
    """One raw sensor frame plus the metadata needed to interpret it.

    data : (height, width) float64 array of raw counts.
    pattern : color filter layout, one of RGGB, BGGR, GRBG, GBRG.
    bit_depth : raw sample depth in bits (8, 10, 12, or 16).
    black_level : sensor pedestal in raw counts.
    wb_gains : (red_gain, blue_gain) applied after interpolation.
    """

    data: np.ndarray
    pattern: str
    bit_depth: int
    black_level: float
    wb_gains: tuple

    def __post_init__(self):
        data = np.ascontiguousarray(np.asarray(self.data, dtype=np.float64))
        object.__setattr__(self, "data", data)
        if data.ndim != 2:
            raise ValueError("Bayer data must be a single 2D plane")
        h, w = data.shape
        if h % 2 or w % 2 or h < 2 or w < 2:
            raise ValueError(f"Bayer dimensions must be even, got {h}x{w}")
        if self.pattern not in PATTERNS:
            raise ValueError(
                f"unknown Bayer pattern {self.pattern!r}; "
                f"expected one of {sorted(PATTERNS)}"
            )
        if self.bit_depth not in _BIT_DEPTHS:
            raise ValueError(
                f"bit_depth must be one of {_BIT_DEPTHS}, got {self.bit_depth}"
            )
        if not 0 <= self.black_level < 2 ** self.bit_depth:
            raise ValueError(
                f"black_level {self.black_level} outside [0, 2^{self.bit_depth})"
            )
        rg, bg = self.wb_gains
        if rg <= 0 or bg <= 0:
            raise ValueError(f"wb_gains must be positive, got {self.wb_gains}")
        object.__setattr__(self, "wb_gains", (float(rg), float(bg)))


def _site_masks(pattern, shape):
    r, g1, g2, b = PATTERNS[pattern]
    masks = []
    for offsets in ((r,), (g1, g2), (b,)):
        m = np.zeros(shape)
        for dr, dc in offsets:
            m[dr::2, dc::2] = 1.0
        masks.append(m)
    return masks


def _interpolate(values, mask):
    # Normalized convolution: tent-weighted average of the masked samples.
    # Edge replication keeps border estimates from darkening.
    num = ndimage.convolve(values * mask, _KERNEL, mode="nearest")
    den = ndimage.convolve(mask, _KERNEL, mode="nearest")
    return num / den


def demosaic(frame):
    """Interpolate a Bayer frame to a full 3-channel RGB image.

    Steps: subtract black level (clamped at 0), normalize by the remaining
    dynamic range, bilinearly fill each color channel from its same-color
    sites, apply white-balance gains to R and B, clip to [0, 1].
    """
    span = 2 ** frame.bit_depth - 1 - frame.black_level
    if span <= 0:
        raise ValueError("black_level leaves no dynamic range")
    norm = np.maximum(frame.data - frame.black_level, 0.0) / span
    out = np.empty((3, *frame.data.shape))
    for ch, mask in enumerate(_site_masks(frame.pattern, frame.data.shape)):
        interp = _interpolate(norm, mask)
        # Measured sites are copied exactly; only the gaps are interpolated.
        out[ch] = norm * mask + (1.0 - mask) * interp
    red_gain, blue_gain = frame.wb_gains
    out[0] *= red_gain
    out[2] *= blue_gain
    return np.clip(out, 0.0, 1.0)


def bayer_to_gray(frame):
    """Demosaic then collapse to one channel with the BT.601 weights."""
    return rgb_to_gray(demosaic(frame))


def _parse_gains(text):
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != 2:
        raise ValueError(f"wb_gains must be two numbers, got {text!r}")
    return float(parts[0]), float(parts[1])


def load_bayer(data_path, sidecar_path):
    """Build a BayerFrame from a raw file plus its sidecar metadata.

    The data file is either a 16-bit grayscale PNG (raw counts) or an LPC1
    raw file with one channel. The sidecar is a key-value text file and must
    define pattern, bit_depth, black_level, and wb_gains; none are defaulted.
    """
    meta = read_keyvalues(sidecar_path)
    missing = [k for k in ("pattern", "bit_depth", "black_level", "wb_gains") if k not in meta]
    if missing:
        raise ValueError(f"sidecar {sidecar_path} missing required keys: {', '.join(missing)}")
    text = str(data_path)
    if text.lower().endswith(".lpc1"):
        arr = read_raw(data_path)
    else:
        arr = load_image(data_path, as_float=False)
    if arr.shape[0] != 1:
        raise ValueError(f"Bayer data must be single-channel, got {arr.shape[0]} channels")
    return BayerFrame(
        data=arr[0],
        pattern=meta["pattern"].upper(),
        bit_depth=int(meta["bit_depth"]),
        black_level=float(meta["black_level"]),
        wb_gains=_parse_gains(meta["wb_gains"]),
    )
