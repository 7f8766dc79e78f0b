"""Image comparison metrics: MSE, PSNR, and single-scale SSIM."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .image import as_image, extract_region, resize_to

__all__ = ["MetricReport", "mse", "psnr", "ssim", "compare"]

_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03


def _check_pair(a, b):
    a = as_image(a)
    b = as_image(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def mse(a, b):
    """Mean over all pixels and channels of the squared difference."""
    a, b = _check_pair(a, b)
    diff = a - b
    return float(np.mean(diff * diff))


def psnr(a, b, peak=1.0):
    """10 * log10(peak^2 / mse). Raises on identical inputs (mse = 0)."""
    if peak <= 0:
        raise ValueError(f"peak must be positive, got {peak}")
    err = mse(a, b)
    if err == 0.0:
        raise ValueError("images are identical: PSNR is unbounded")
    return float(10.0 * np.log10(peak * peak / err))


def _gaussian_window():
    half = (_SSIM_WINDOW - 1) // 2
    offsets = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(offsets**2) / (2.0 * _SSIM_SIGMA**2))
    return g / g.sum()


def _windowed_mean(plane, kernel):
    # Separable weighted mean; only the valid interior is kept, so the
    # boundary mode never influences the result.
    half = (_SSIM_WINDOW - 1) // 2
    out = ndimage.correlate1d(plane, kernel, axis=0, mode="constant")
    out = ndimage.correlate1d(out, kernel, axis=1, mode="constant")
    return out[half:-half, half:-half]


def _ssim_plane(x, y, peak, kernel):
    c1 = (_SSIM_K1 * peak) ** 2
    c2 = (_SSIM_K2 * peak) ** 2
    mu_x = _windowed_mean(x, kernel)
    mu_y = _windowed_mean(y, kernel)
    var_x = _windowed_mean(x * x, kernel) - mu_x * mu_x
    var_y = _windowed_mean(y * y, kernel) - mu_y * mu_y
    cov = _windowed_mean(x * y, kernel) - mu_x * mu_y
    score = ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)) / (
        (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    )
    return float(score.mean())


def ssim(a, b, peak=1.0):
    """Mean structural similarity over valid 11x11 Gaussian windows.

    Uses the standard constants (sigma 1.5, K1 0.01, K2 0.03) with dynamic
    range ``peak``; channels are scored separately and averaged.
    """
    if peak <= 0:
        raise ValueError(f"peak must be positive, got {peak}")
    a, b = _check_pair(a, b)
    _, h, w = a.shape
    if min(h, w) < _SSIM_WINDOW:
        raise ValueError(
            f"image {h}x{w} is smaller than the {_SSIM_WINDOW}x{_SSIM_WINDOW} SSIM window"
        )
    kernel = _gaussian_window()
    scores = [_ssim_plane(a[k], b[k], peak, kernel) for k in range(a.shape[0])]
    return float(np.mean(scores))


@dataclass(frozen=True)
class MetricReport:
    """MSE/PSNR/SSIM bundle for one comparison.

    ``psnr_db`` is None when the inputs are identical (mse = 0), keeping
    reports free of infinities.
    """

    mse: float
    psnr_db: float | None
    ssim: float

    def to_dict(self):
        return {"mse": self.mse, "psnr_db": self.psnr_db, "ssim": self.ssim}


def _normalize_own_max(img):
    peak = img.max()
    if peak > 0:
        return img / peak
    return img


def compare(reconstruction, reference, region=None):
    """Score a reconstruction against a reference image.

    The optional region is cut from the reconstruction, the reference is
    resampled to the compared dims, and both images are normalized by
    their own maximum before scoring with peak 1. The normalization suits
    reconstructions of arbitrary scale and is part of the reported
    numbers' definition.
    """
    reconstruction = as_image(reconstruction)
    reference = as_image(reference)
    if region is not None:
        reconstruction = extract_region(reconstruction, region)
    if reconstruction.shape[0] != reference.shape[0]:
        raise ValueError(
            f"channel mismatch: {reconstruction.shape[0]} vs {reference.shape[0]}"
        )
    _, h, w = reconstruction.shape
    reference = resize_to(reference, h, w)
    a = _normalize_own_max(reconstruction)
    b = _normalize_own_max(reference)
    err = mse(a, b)
    return MetricReport(
        mse=err,
        psnr_db=None if err == 0.0 else psnr(a, b, peak=1.0),
        ssim=ssim(a, b, peak=1.0),
    )
