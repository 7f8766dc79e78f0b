"""Point spread function calibration and diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .convolve import autocorr2d
from .image import as_image, validate_image

__all__ = ["Psf", "calibrate_psf", "psf_report"]


@dataclass(frozen=True)
class Psf:
    """Calibrated point spread function.

    image : (channels, height, width) array, non-negative, each channel
        summing to 1.
    background_floor : per-channel floor subtracted during calibration.
    normalization : per-channel scale applied after floor subtraction so
        that each channel sums to 1.
    """

    image: np.ndarray
    background_floor: np.ndarray
    normalization: np.ndarray

    def __post_init__(self):
        validate_image(self.image, "psf image")
        if np.min(self.image) < 0:
            raise ValueError("calibrated PSF must be non-negative")
        sums = self.image.sum(axis=(1, 2))
        if not np.allclose(sums, 1.0, atol=1e-9):
            raise ValueError(f"each PSF channel must sum to 1, got sums {sums}")

    @property
    def shape(self):
        return self.image.shape


def calibrate_psf(raw, floor_percentile=0.0):
    """Floor-subtract and normalize a measured PSF image.

    Per channel: the floor is the ``floor_percentile`` quantile of the pixel
    values (a fraction in [0, 1]; at 0 the floor is the channel minimum),
    values below it clamp to 0, and the channel is rescaled to unit sum.

    Raises
    ------
    ValueError
        If the input has negatives, or a channel is identically zero after
        floor subtraction.
    """
    raw = as_image(raw)
    if np.min(raw) < 0:
        raise ValueError("raw PSF must be non-negative")
    p = float(floor_percentile)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"floor_percentile must be in [0, 1], got {p}")
    c = raw.shape[0]
    floors = np.empty(c)
    scales = np.empty(c)
    out = np.empty_like(raw)
    for k in range(c):
        floors[k] = np.quantile(raw[k], p)
        shifted = np.maximum(raw[k] - floors[k], 0.0)
        total = shifted.sum()
        if total <= 0.0:
            raise ValueError(
                f"PSF channel {k} is identically zero after floor subtraction"
            )
        scales[k] = 1.0 / total
        out[k] = shifted * scales[k]
    return Psf(image=out, background_floor=floors, normalization=scales)


def psf_report(psf):
    """Quantitative PSF quality summary.

    Per channel:

    * ``peak_to_sidelobe``: autocorrelation peak divided by the largest
      autocorrelation value outside the 3x3 block around the peak (higher
      is better; None when there is no energy outside that block).
    * ``spectral_conditioning``: min |spectrum| / max |spectrum| over the
      channel's H x W discrete spectrum (1 for a delta, 0 when some
      frequency is unrecoverable).
    * ``support_pixels`` / ``support_fraction``: pixels above 1% of the
      channel maximum.
    """
    c, h, w = psf.image.shape
    channels = []
    for k in range(c):
        plane = psf.image[k]
        corr = autocorr2d(plane)
        cy, cx = h - 1, w - 1
        peak = corr[cy, cx]
        sidelobes = corr.copy()
        sidelobes[max(cy - 1, 0) : cy + 2, max(cx - 1, 0) : cx + 2] = -np.inf
        side = float(np.max(sidelobes))
        ratio = float(peak / side) if side > 0 else None
        spectrum = np.abs(np.fft.fft2(plane))
        conditioning = float(spectrum.min() / spectrum.max())
        support = int(np.count_nonzero(plane > 0.01 * plane.max()))
        channels.append(
            {
                "channel": k,
                "peak_to_sidelobe": ratio,
                "spectral_conditioning": conditioning,
                "support_pixels": support,
                "support_fraction": support / (h * w),
            }
        )
    return {"height": h, "width": w, "channels": channels}
