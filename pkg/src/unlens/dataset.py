"""Synthetic measurement simulation, paired datasets, and batch evaluation.

A paired dataset on disk is laid out as::

    root/
      psf.png            (or .tif/.tiff/.lpc1)
      diffuser/<name>    lensless measurements
      lensed/<name>      matching reference images

with identical file name sets under diffuser/ and lensed/. A JSON manifest
``{"psf": path, "pairs": [[lensless, lensed], ...]}`` (paths relative to
the dataset root) overrides the directory convention.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .convolve import plan
from .image import as_image, downsample
from .io import load_array, save_image
from .metrics import compare
from .psf import calibrate_psf
from .solvers import new_reconstruction

__all__ = [
    "SimulationConfig",
    "PairedDataset",
    "simulate_measurement",
    "load_dataset",
    "evaluate_dataset",
    "evaluate_single",
]

_PSF_SUFFIXES = (".png", ".tif", ".tiff", ".lpc1")


@dataclass(frozen=True)
class SimulationConfig:
    """Noise settings for synthetic measurements.

    ``snr_db`` may be ``float("inf")`` for a noise-free measurement. The
    seed makes the noise bit-reproducible.
    """

    snr_db: float = float("inf")
    seed: int = 0
    clip: bool = False


def simulate_measurement(scene, psf, cfg):
    """Forward-model a scene through the PSF and add seeded Gaussian noise.

    The noise is rescaled so the realized SNR equals ``snr_db`` exactly:
    10 * log10(||signal||^2 / ||noise||^2) = snr_db. A zero scene yields a
    zero measurement by that rule (zero signal power scales the noise to
    zero). With ``clip`` set, negatives are clamped after noise.
    """
    scene = as_image(scene)
    if scene.min() < 0 or scene.max() > 1:
        raise ValueError("scene values must lie in [0, 1]")
    op = plan(psf)
    y = op.apply(scene)
    if np.isfinite(cfg.snr_db):
        noise = np.random.default_rng(cfg.seed).standard_normal(y.shape)
        norm = np.linalg.norm(noise)
        if norm > 0:
            scale = np.linalg.norm(y) / norm * 10.0 ** (-cfg.snr_db / 20.0)
            y = y + scale * noise
    if cfg.clip:
        y = np.maximum(y, 0.0)
    return y


@dataclass(frozen=True)
class PairedDataset:
    """Validated list of (lensless, lensed) file pairs plus the PSF path."""

    root: str
    entries: tuple
    psf_path: str
    downsample: int = 1


def _find_psf(root):
    for suffix in _PSF_SUFFIXES:
        candidate = os.path.join(root, "psf" + suffix)
        if os.path.exists(candidate):
            return candidate
    raise FileNotFoundError(f"no PSF image (psf.png/.tif/.tiff/.lpc1) under {root}")


def _pairs_from_dirs(root):
    diffuser = os.path.join(root, "diffuser")
    lensed = os.path.join(root, "lensed")
    for d in (diffuser, lensed):
        if not os.path.isdir(d):
            raise FileNotFoundError(f"missing dataset directory: {d}")
    names_a = set(os.listdir(diffuser))
    names_b = set(os.listdir(lensed))
    orphans = sorted(names_a ^ names_b)
    if orphans:
        raise ValueError(f"unpaired dataset files: {', '.join(orphans)}")
    return [
        (os.path.join(diffuser, n), os.path.join(lensed, n)) for n in sorted(names_a)
    ]


def _pairs_from_manifest(root, manifest):
    with open(manifest, "r", encoding="utf-8") as f:
        listing = json.load(f)
    psf_path = os.path.join(root, listing["psf"])
    pairs = [
        (os.path.join(root, a), os.path.join(root, b)) for a, b in listing["pairs"]
    ]
    return psf_path, sorted(pairs)


def load_dataset(root, manifest=None, downsample=1):
    """Collect and validate the pair list of a dataset directory."""
    root = os.fspath(root)
    if manifest is not None:
        psf_path, pairs = _pairs_from_manifest(root, manifest)
    else:
        psf_path = _find_psf(root)
        pairs = _pairs_from_dirs(root)
    if not pairs:
        raise ValueError(f"empty dataset under {root}")
    for a, b in pairs:
        for p in (a, b):
            if not os.path.exists(p):
                raise FileNotFoundError(f"dataset file missing: {p}")
    if not os.path.exists(psf_path):
        raise FileNotFoundError(f"dataset PSF missing: {psf_path}")
    return PairedDataset(
        root=root, entries=tuple(pairs), psf_path=psf_path, downsample=int(downsample)
    )


def _load_scaled(path, factor):
    return downsample(load_array(path), factor)


def _dataset_psf(ds, floor_percentile=0.0):
    raw = _load_scaled(ds.psf_path, ds.downsample)
    return calibrate_psf(raw, floor_percentile)


def _evaluate_pair(psf, config, pair, factor, region):
    lensless_path, lensed_path = pair
    name = os.path.basename(lensless_path)
    started = time.perf_counter()
    lensless = _load_scaled(lensless_path, factor)
    lensed = _load_scaled(lensed_path, factor)
    rec = new_reconstruction(psf, config)
    rec.set_data(lensless)
    estimate = rec.apply()
    report = compare(estimate, lensed, region)
    record = {"name": name}
    record.update(report.to_dict())
    record["seconds"] = time.perf_counter() - started
    return record, estimate


def evaluate_dataset(ds, config, jobs=1, region=None, floor_percentile=0.0,
                     out_dir=None):
    """Reconstruct every pair and score it against its reference.

    Returns ``(aggregate, per_file)`` where per_file is a list of records
    sorted by name (failed pairs carry an ``error`` key instead of
    metrics) and aggregate holds the arithmetic mean of each metric over
    the successful pairs. PSNR entries of None (identical images) are
    left out of the PSNR mean. With ``out_dir`` each reconstruction is
    also written there as a 16-bit PNG named after its measurement file.
    """
    psf = _dataset_psf(ds, floor_percentile)

    def worker(pair):
        name = os.path.basename(pair[0])
        try:
            record, estimate = _evaluate_pair(psf, config, pair, ds.downsample, region)
            if out_dir is not None:
                stem = os.path.splitext(name)[0]
                out_path = os.path.join(out_dir, f"{stem}_recon.png")
                save_image(estimate, out_path, bit_depth=16)
                record["out"] = out_path
            return record
        except Exception as exc:  # per-file isolation: record and move on
            return {"name": name, "error": str(exc)}

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(worker, ds.entries))
    else:
        records = [worker(pair) for pair in ds.entries]
    records.sort(key=lambda r: r["name"])
    successes = [r for r in records if "error" not in r]
    failures = len(records) - len(successes)
    aggregate = {"pairs": len(successes), "failures": failures}
    for key in ("mse", "psnr_db", "ssim"):
        values = [r[key] for r in successes if r[key] is not None]
        aggregate[key] = float(np.mean(values)) if values else None
    return aggregate, records


def evaluate_single(ds, index, config, snapshot_iters):
    """Run one pair, scoring the iterate at each requested iteration.

    Returns a list of ``{"iteration", "report", "image"}`` records in
    snapshot order; iteration 0 scores the initial all-zero estimate.
    """
    if not 0 <= index < len(ds.entries):
        raise IndexError(f"pair index {index} out of range [0, {len(ds.entries)})")
    snapshots = sorted(set(int(k) for k in snapshot_iters))
    if not snapshots:
        raise ValueError("snapshot_iters must name at least one iteration")
    if snapshots[0] < 0:
        raise ValueError("snapshot iterations must be >= 0")
    psf = _dataset_psf(ds)
    lensless_path, lensed_path = ds.entries[index]
    lensless = _load_scaled(lensless_path, ds.downsample)
    lensed = _load_scaled(lensed_path, ds.downsample)
    rec = new_reconstruction(psf, replace(config, callback_every=1))
    rec.set_data(lensless)
    results = []

    def capture(iteration, image):
        results.append(
            {
                "iteration": iteration,
                "report": compare(image, lensed),
                "image": np.array(image),
            }
        )

    if snapshots[0] == 0:
        capture(0, rec.iterate)
    wanted = set(snapshots)

    def callback(iteration, image, objective):
        if iteration in wanted:
            capture(iteration, image)

    total = max(snapshots)
    if total > 0:
        rec.apply(n_iter=total, callback=callback)
    return results
