"""Raw sensor path: mosaic an RGB image onto a Bayer grid, then run the
preprocessing pipeline (black level, demosaic, white balance) and check
how much survives.

Run from the repository root:

    python3 demos/03_bayer_pipeline.py
"""

import numpy as np

from unlens import BayerFrame, bayer_to_gray, compare, demosaic
from unlens.bayer import PATTERNS, _site_masks

rng = np.random.default_rng(3)
h, w = 64, 64

# Smooth random test card; demosaicing interpolates, so hard pixel noise
# would be the worst case rather than the typical one.
base = rng.random((3, h // 8, w // 8))
truth = np.zeros((3, h, w))
for c in range(3):
    truth[c] = np.kron(base[c], np.ones((8, 8)))

bit_depth = 10
black = 64.0
full_scale = 2**bit_depth - 1 - black
gains = (1.4, 1.1)  # red, blue

for pattern in PATTERNS:
    # Build the raw frame the way a sensor would: one color per site,
    # inverse white balance, black level added back on top.
    r_mask, g_mask, b_mask = _site_masks(pattern, (h, w))
    mosaic = (
        truth[0] / gains[0] * r_mask
        + truth[1] * g_mask
        + truth[2] / gains[1] * b_mask
    )
    counts = mosaic * full_scale + black
    frame = BayerFrame(
        data=counts,
        pattern=pattern,
        bit_depth=bit_depth,
        black_level=black,
        wb_gains=gains,
    )
    rgb = demosaic(frame)
    report = compare(rgb, truth)
    psnr = "inf" if report.psnr_db is None else f"{report.psnr_db:.1f}"
    print(f"{pattern}: demosaic PSNR {psnr} dB, ssim {report.ssim:.4f}")

# The grayscale shortcut demosaics and then collapses with luma weights;
# useful when reconstructing single-channel measurements from raw frames.
frame = BayerFrame(
    data=truth[1] * full_scale + black,
    pattern="RGGB",
    bit_depth=bit_depth,
    black_level=black,
    wb_gains=(1.0, 1.0),
)
gray = bayer_to_gray(frame)
print(f"grayscale path: shape {gray.shape}, range "
      f"[{gray.min():.3f}, {gray.max():.3f}]")
