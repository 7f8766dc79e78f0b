import numpy as np
import pytest

from unlens.bayer import (
    PATTERNS,
    BayerFrame,
    bayer_to_gray,
    demosaic,
    load_bayer,
    _site_masks,
)
from unlens.io import save_image

from oracles import direct_demosaic_plane


def _random_frame(rng, pattern, h=6, w=8, bit_depth=10, black=64, gains=(1.0, 1.0)):
    counts = rng.integers(black, 2 ** bit_depth, size=(h, w)).astype(float)
    return BayerFrame(
        data=counts,
        pattern=pattern,
        bit_depth=bit_depth,
        black_level=float(black),
        wb_gains=gains,
    )


def test_frame_validation():
    good = np.zeros((4, 4))
    BayerFrame(data=good, pattern="RGGB", bit_depth=10, black_level=0.0,
               wb_gains=(1.0, 1.0))
    with pytest.raises(ValueError):
        BayerFrame(data=np.zeros((3, 4)), pattern="RGGB", bit_depth=10,
                   black_level=0.0, wb_gains=(1.0, 1.0))  # odd height
    with pytest.raises(ValueError):
        BayerFrame(data=good, pattern="RGBG", bit_depth=10, black_level=0.0,
                   wb_gains=(1.0, 1.0))
    with pytest.raises(ValueError):
        BayerFrame(data=good, pattern="RGGB", bit_depth=11, black_level=0.0,
                   wb_gains=(1.0, 1.0))
    with pytest.raises(ValueError):
        BayerFrame(data=good, pattern="RGGB", bit_depth=10, black_level=-1.0,
                   wb_gains=(1.0, 1.0))


def test_site_masks_tile_correctly():
    for pattern in PATTERNS:
        masks = _site_masks(pattern, (4, 4))
        total = sum(masks.values()) if isinstance(masks, dict) else sum(masks)
        # every site belongs to exactly one color
        np.testing.assert_array_equal(np.asarray(total), np.ones((4, 4)))


def test_demosaic_constant_frame_is_constant():
    # a flat sensor reading must demosaic to a flat image in every channel
    for pattern in PATTERNS:
        frame = BayerFrame(
            data=np.full((6, 6), 600.0),
            pattern=pattern,
            bit_depth=10,
            black_level=88.0,
            wb_gains=(1.0, 1.0),
        )
        rgb = demosaic(frame)
        expect = (600.0 - 88.0) / (1023.0 - 88.0)
        np.testing.assert_allclose(rgb, np.full((3, 6, 6), expect), atol=1e-12)


def test_demosaic_preserves_known_sites():
    rng = np.random.default_rng(5)
    frame = _random_frame(rng, "RGGB")
    rgb = demosaic(frame)
    norm = (frame.data - frame.black_level) / (2 ** frame.bit_depth - 1 - frame.black_level)
    # red sites sit at even rows, even cols under RGGB
    np.testing.assert_allclose(rgb[0, 0::2, 0::2], norm[0::2, 0::2], atol=1e-12)
    np.testing.assert_allclose(rgb[2, 1::2, 1::2], norm[1::2, 1::2], atol=1e-12)
    np.testing.assert_allclose(rgb[1, 0::2, 1::2], norm[0::2, 1::2], atol=1e-12)
    np.testing.assert_allclose(rgb[1, 1::2, 0::2], norm[1::2, 0::2], atol=1e-12)


def test_demosaic_matches_direct_oracle():
    rng = np.random.default_rng(6)
    for pattern in PATTERNS:
        for trial in range(3):
            frame = _random_frame(rng, pattern, h=6, w=8)
            rgb = demosaic(frame)
            norm = (frame.data - frame.black_level) / (
                2 ** frame.bit_depth - 1 - frame.black_level
            )
            masks = _site_masks(pattern, (6, 8))
            for ch, mask in enumerate(masks):
                interp = direct_demosaic_plane(norm, mask)
                want = norm * mask + (1.0 - mask) * interp
                np.testing.assert_allclose(
                    rgb[ch], np.clip(want, 0.0, 1.0), atol=1e-10,
                    err_msg=f"{pattern} channel {ch}",
                )


def test_demosaic_applies_gains_and_clips():
    frame = BayerFrame(
        data=np.full((4, 4), 1023.0),
        pattern="RGGB",
        bit_depth=10,
        black_level=0.0,
        wb_gains=(1.9, 1.9),
    )
    rgb = demosaic(frame)
    np.testing.assert_allclose(rgb[0], 1.0)  # gain pushed red over 1, clipped
    np.testing.assert_allclose(rgb[2], 1.0)
    np.testing.assert_allclose(rgb[1], 1.0)


def test_demosaic_black_level_clamps():
    # counts below black must clamp to zero, not go negative
    frame = BayerFrame(
        data=np.full((4, 4), 10.0),
        pattern="RGGB",
        bit_depth=10,
        black_level=64.0,
        wb_gains=(1.0, 1.0),
    )
    rgb = demosaic(frame)
    np.testing.assert_array_equal(rgb, np.zeros((3, 4, 4)))


def test_bayer_to_gray_range():
    rng = np.random.default_rng(7)
    frame = _random_frame(rng, "BGGR")
    gray = bayer_to_gray(frame)
    assert gray.shape == (1, 6, 8)
    assert gray.min() >= 0.0 and gray.max() <= 1.0


def test_load_bayer_roundtrip(tmp_path):
    rng = np.random.default_rng(8)
    counts = rng.integers(0, 256, size=(6, 6)).astype(float)
    raw_path = tmp_path / "frame.png"
    save_image((counts / 255.0)[None], raw_path, bit_depth=8)
    sidecar = tmp_path / "frame.txt"
    sidecar.write_text(
        "pattern = GRBG\nbit_depth = 8\nblack_level = 0\nwb_gains = 1.0, 1.0\n"
    )
    frame = load_bayer(raw_path, sidecar)
    assert frame.pattern == "GRBG"
    assert frame.bit_depth == 8
    np.testing.assert_array_equal(frame.data, counts)


def test_load_bayer_missing_keys(tmp_path):
    raw_path = tmp_path / "frame.png"
    save_image(np.zeros((1, 4, 4)), raw_path, bit_depth=8)
    sidecar = tmp_path / "frame.txt"
    sidecar.write_text("pattern = RGGB\n")
    with pytest.raises(ValueError, match="bit_depth"):
        load_bayer(raw_path, sidecar)
