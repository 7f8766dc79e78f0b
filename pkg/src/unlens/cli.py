"""Command-line interface to the full reconstruction pipeline.

One executable, six subcommands: ``recon``, ``simulate``, ``benchmark``,
``evaluate``, ``metrics``, ``psf-report``. Machine-readable JSON goes to
stdout (JSON Lines for per-file evaluation records), human-oriented
progress to stderr. Exit codes: 0 success, 1 usage or input error,
2 runtime failure.

Every subcommand accepts ``--config FILE`` naming a plain-text key-value
file (``key = value`` per line, ``#`` comments) whose keys are long flag
names; explicit flags override file values. The ``UNLENS_OUT_DIR``
environment variable, when set, resolves relative ``--out`` paths inside
that directory.
"""

from __future__ import annotations

import argparse
import json
import os
import statistics
import sys
import time

import numpy as np

from .bayer import demosaic, load_bayer
from .dataset import (
    SimulationConfig,
    evaluate_dataset,
    evaluate_single,
    load_dataset,
    simulate_measurement,
)
from .image import Region, downsample, rgb_to_gray
from .io import RAW_SUFFIX, load_array, read_keyvalues, save_image, write_raw
from .metrics import compare
from .psf import calibrate_psf, psf_report
from .solvers import ALGORITHMS, SolverConfig, new_reconstruction

__all__ = ["main"]

OUT_DIR_ENV = "UNLENS_OUT_DIR"


class UsageError(Exception):
    """Bad paths, flags, or input files; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # Usage errors exit 1 (argparse defaults to 2, which is reserved for
    # runtime failures here).
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _region_arg(text):
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(
            f"region must be 'top,left,height,width', got {text!r}"
        )
    try:
        top, left, height, width = (int(p) for p in parts)
        return Region(top=top, left=left, height=height, width=width)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _size_arg(text):
    try:
        h, w = text.lower().split("x")
        return int(h), int(w)
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must be 'HxW', got {text!r}")


def _step_size_arg(text):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"step size must be a number or 'auto', got {text!r}"
        )


def _snapshots_arg(text):
    try:
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"snapshots must be comma-separated integers, got {text!r}")


def _add_common_input_flags(sub):
    sub.add_argument("--downsample", type=int, default=1, metavar="F",
                     help="box-average inputs by an integer factor (default 1)")
    sub.add_argument("--gray", action="store_true",
                     help="convert RGB inputs to grayscale before processing")
    sub.add_argument("--floor-percentile", type=float, default=0.0, metavar="P",
                     help="PSF background floor quantile in [0, 1] (default 0)")


def _add_solver_flags(sub):
    sub.add_argument("--algo", choices=ALGORITHMS, default="admm",
                     help="reconstruction algorithm (default admm)")
    sub.add_argument("--n-iter", type=int, default=100, metavar="K",
                     help="iteration count (default 100)")
    sub.add_argument("--step-size", type=_step_size_arg, default="auto", metavar="S",
                     help="gradient step size or 'auto' for 1/lipschitz")
    sub.add_argument("--tv-weight", type=float, default=None, metavar="T",
                     help="regularizer weight (admm: TV; apgd: elementwise l1)")
    sub.add_argument("--mu1", type=float, default=None, help="ADMM data-fit penalty")
    sub.add_argument("--mu2", type=float, default=None, help="ADMM TV penalty")
    sub.add_argument("--mu3", type=float, default=None, help="ADMM constraint penalty")
    sub.add_argument("--no-nonneg", action="store_true",
                     help="drop the non-negativity constraint")
    sub.add_argument("--fft", choices=("real", "complex"), default="real",
                     help="FFT path: real half-spectrum or the complex reference")
    sub.add_argument("--no-timing", action="store_true",
                     help="omit wall-clock fields from JSON output (reproducible bytes)")


def _build_parser():
    parser = _Parser(prog="unlens",
                     description="Lensless-imaging reconstruction toolkit")
    subs = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")
    table = {}

    def make(name, help_text):
        sub = subs.add_parser(name, help=help_text, description=help_text)
        sub.add_argument("--config", metavar="FILE",
                         help="key-value file of flag defaults; flags override it")
        table[name] = sub
        return sub

    sub = make("recon", "reconstruct a scene from a lensless measurement")
    sub.add_argument("--psf", required=True, help="PSF image (PNG/TIFF/LPC1)")
    sub.add_argument("--data", required=True, help="measurement image (PNG/TIFF/LPC1)")
    sub.add_argument("--psf-sidecar", metavar="FILE",
                     help="treat the PSF file as raw Bayer data with this sidecar")
    sub.add_argument("--sidecar", metavar="FILE",
                     help="treat the data file as raw Bayer data with this sidecar")
    sub.add_argument("--out", help="output image path (.png/.tif/.tiff/.lpc1)")
    sub.add_argument("--save-every", type=int, default=0, metavar="K",
                     help="write an intermediate image every K iterations")
    sub.add_argument("--bit-depth", type=int, choices=(8, 16), default=8,
                     help="quantization depth for PNG/TIFF outputs (default 8)")
    _add_common_input_flags(sub)
    _add_solver_flags(sub)
    sub.set_defaults(handler=cmd_recon)

    sub = make("simulate", "forward-model a scene into a noisy measurement")
    sub.add_argument("--scene", required=True, help="ground-truth scene image")
    sub.add_argument("--psf", required=True, help="PSF image (PNG/TIFF/LPC1)")
    sub.add_argument("--snr-db", type=float, default=float("inf"),
                     help="measurement SNR in dB (default: noise-free)")
    sub.add_argument("--seed", type=int, default=0, help="noise seed (default 0)")
    sub.add_argument("--clip", action="store_true", help="clamp negatives after noise")
    sub.add_argument("--out", required=True,
                     help="measurement output path (.png/.tif/.tiff/.lpc1)")
    sub.add_argument("--bit-depth", type=int, choices=(8, 16), default=16,
                     help="quantization depth for PNG/TIFF outputs (default 16)")
    _add_common_input_flags(sub)
    sub.set_defaults(handler=cmd_simulate)

    sub = make("benchmark", "time the real and complex FFT reconstruction paths")
    sub.add_argument("--size", type=_size_arg, default=(512, 512), metavar="HxW",
                     help="synthetic grayscale problem size (default 512x512)")
    sub.add_argument("--n-iter-gd", type=int, default=300, metavar="K",
                     help="gradient-descent iterations (default 300)")
    sub.add_argument("--n-iter-admm", type=int, default=5, metavar="K",
                     help="ADMM iterations (default 5)")
    sub.add_argument("--repeats", type=int, default=5, metavar="R",
                     help="timing repeats; medians are reported (default 5)")
    sub.set_defaults(handler=cmd_benchmark)

    sub = make("evaluate", "score reconstructions over a paired dataset")
    sub.add_argument("--root", required=True, help="dataset root directory")
    sub.add_argument("--manifest", metavar="FILE",
                     help="JSON manifest overriding the directory layout")
    sub.add_argument("--jobs", type=int, default=1, metavar="N",
                     help="parallel workers (default 1)")
    sub.add_argument("--region", type=_region_arg, metavar="T,L,H,W",
                     help="score only this region of each reconstruction")
    sub.add_argument("--index", type=int, default=None, metavar="I",
                     help="evaluate a single pair, reporting snapshot metrics")
    sub.add_argument("--snapshots", type=_snapshots_arg, default=None, metavar="K1,K2",
                     help="iterations to score with --index (default: final)")
    sub.add_argument("--out", help="directory for reconstructed images")
    _add_common_input_flags(sub)
    _add_solver_flags(sub)
    sub.set_defaults(handler=cmd_evaluate)

    sub = make("metrics", "compare two images")
    sub.add_argument("reconstruction", help="image under test (PNG/TIFF/LPC1)")
    sub.add_argument("reference", help="reference image (PNG/TIFF/LPC1)")
    sub.add_argument("--region", type=_region_arg, metavar="T,L,H,W",
                     help="score only this region of the first image")
    sub.add_argument("--gray", action="store_true",
                     help="convert RGB inputs to grayscale before comparing")
    sub.set_defaults(handler=cmd_metrics)

    sub = make("psf-report", "quantitative PSF quality summary")
    sub.add_argument("--psf", required=True, help="PSF image (PNG/TIFF/LPC1)")
    sub.add_argument("--psf-sidecar", metavar="FILE",
                     help="treat the PSF file as raw Bayer data with this sidecar")
    sub.add_argument("--out", help="write the JSON report here instead of stdout")
    _add_common_input_flags(sub)
    sub.set_defaults(handler=cmd_psf_report)

    return parser, table


def _config_tokens(sub, path):
    """Turn a key-value config file into argv tokens for ``sub``."""
    try:
        pairs = read_keyvalues(path)
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc))
    tokens = []
    for key, value in pairs.items():
        opt = "--" + key.strip().lstrip("-").replace("_", "-")
        if opt == "--config":
            raise UsageError("config files cannot set --config")
        action = sub._option_string_actions.get(opt)
        if action is None:
            raise UsageError(f"unknown config key for {sub.prog}: {key}")
        if action.nargs == 0:
            flag = value.strip().lower()
            if flag in ("1", "true", "yes", "on"):
                tokens.append(opt)
            elif flag in ("0", "false", "no", "off"):
                pass
            else:
                raise UsageError(f"config key {key} expects a boolean, got {value!r}")
        else:
            tokens.extend([opt, value])
    return tokens


def _resolve_out(path):
    if path is None:
        return None
    base = os.environ.get(OUT_DIR_ENV)
    if base and not os.path.isabs(path):
        path = os.path.join(base, path)
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    return path


def _write_output(img, path, bit_depth):
    if str(path).lower().endswith(RAW_SUFFIX):
        write_raw(img, path)
    else:
        save_image(img, path, bit_depth=bit_depth)


def _load_planar(path, sidecar, gray, factor):
    """Load an image, demosaicing raw Bayer input when a sidecar is given."""
    try:
        if sidecar is not None:
            img = demosaic(load_bayer(path, sidecar))
        else:
            img = load_array(path)
        if gray and img.shape[0] == 3:
            img = rgb_to_gray(img)
        return downsample(img, factor)
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc))


def _load_psf(args, sidecar=None):
    img = _load_planar(args.psf, sidecar, args.gray, args.downsample)
    try:
        return calibrate_psf(img, args.floor_percentile)
    except ValueError as exc:
        raise UsageError(str(exc))


def _solver_config(args, callback_every=1):
    return SolverConfig(
        algorithm=args.algo,
        n_iter=args.n_iter,
        step_size=args.step_size,
        tv_weight=args.tv_weight,
        mu1=args.mu1,
        mu2=args.mu2,
        mu3=args.mu3,
        nonneg=not args.no_nonneg,
        callback_every=callback_every,
        fft_mode=args.fft,
    )


def _emit(obj, stream=None):
    print(json.dumps(obj), file=stream or sys.stdout)


def cmd_recon(args):
    psf = _load_psf(args, sidecar=args.psf_sidecar)
    data = _load_planar(args.data, args.sidecar, args.gray, args.downsample)
    if data.shape != psf.image.shape:
        raise UsageError(
            f"data shape {data.shape} does not match PSF shape {psf.image.shape}"
        )
    config = _solver_config(args, callback_every=max(args.save_every, 0))
    try:
        rec = new_reconstruction(psf, config)
    except ValueError as exc:
        raise UsageError(str(exc))
    rec.set_data(data)
    out_path = _resolve_out(args.out)
    snapshots = []
    callback = None
    if args.save_every > 0 and out_path:
        stem, suffix = os.path.splitext(out_path)

        def callback(iteration, image, objective):
            snap_path = f"{stem}_iter{iteration:05d}{suffix}"
            _write_output(image, snap_path, args.bit_depth)
            snapshots.append(snap_path)

    started = time.perf_counter()
    estimate = rec.apply(callback=callback)
    elapsed = time.perf_counter() - started
    if out_path:
        _write_output(estimate, out_path, args.bit_depth)
    summary = {"algorithm": config.algorithm, "iterations": rec.iteration}
    if not args.no_timing:
        summary["seconds"] = elapsed
    summary["final_objective"] = rec.objective_history[-1]
    summary["out"] = out_path
    summary["snapshots"] = snapshots
    _emit(summary)
    return 0


def cmd_simulate(args):
    psf = _load_psf(args)
    scene = _load_planar(args.scene, None, args.gray, args.downsample)
    cfg = SimulationConfig(snr_db=args.snr_db, seed=args.seed, clip=args.clip)
    try:
        y = simulate_measurement(scene, psf, cfg)
    except ValueError as exc:
        raise UsageError(str(exc))
    out_path = _resolve_out(args.out)
    _write_output(y, out_path, args.bit_depth)
    _emit(
        {
            "out": out_path,
            "snr_db": args.snr_db if np.isfinite(args.snr_db) else None,
            "seed": args.seed,
            "clip": args.clip,
            "channels": y.shape[0],
            "height": y.shape[1],
            "width": y.shape[2],
        }
    )
    return 0


def cmd_benchmark(args):
    h, w = args.size
    rng = np.random.default_rng(0)
    psf = calibrate_psf(rng.random((1, h, w)))
    scene = rng.random((1, h, w))
    from .convolve import plan

    y = plan(psf).apply(scene)
    report = {"size": f"{h}x{w}", "repeats": args.repeats}
    for algo, iters in (("gd", args.n_iter_gd), ("admm", args.n_iter_admm)):
        entry = {"n_iter": iters}
        estimates = {}
        for mode in ("real", "complex"):
            cfg = SolverConfig(algorithm=algo, n_iter=iters, fft_mode=mode)
            times = []
            estimate = None
            for _ in range(max(args.repeats, 1)):
                rec = new_reconstruction(psf, cfg)
                rec.set_data(y)
                started = time.perf_counter()
                estimate = rec.apply()
                times.append(time.perf_counter() - started)
            estimates[mode] = estimate
            entry[f"{mode}_seconds"] = statistics.median(times)
        entry["speedup"] = entry["complex_seconds"] / entry["real_seconds"]
        diff = float(np.max(np.abs(estimates["real"] - estimates["complex"])))
        entry["max_abs_diff"] = diff
        entry["paths_agree"] = bool(diff <= 1e-8)
        report[algo] = entry
        print(f"{algo}: {entry['speedup']:.2f}x real-FFT speedup", file=sys.stderr)
    _emit(report)
    return 0


def cmd_evaluate(args):
    try:
        ds = load_dataset(args.root, manifest=args.manifest, downsample=args.downsample)
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc))
    config = _solver_config(args)
    probe = np.zeros((1, 16, 16))
    probe[0, 8, 8] = 1.0
    try:
        new_reconstruction(calibrate_psf(probe), config)
    except ValueError as exc:  # reject bad solver flags before the batch
        raise UsageError(str(exc))
    out_dir = _resolve_out(args.out) if args.out else None
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    if args.index is not None:
        snaps = args.snapshots if args.snapshots else [config.n_iter]
        results = evaluate_single(ds, args.index, config, snaps)
        for item in results:
            record = {"iteration": item["iteration"]}
            record.update(item["report"].to_dict())
            _emit(record)
            if out_dir:
                name = f"pair{args.index:04d}_iter{item['iteration']:05d}.png"
                save_image(item["image"], os.path.join(out_dir, name), bit_depth=16)
        return 0
    aggregate, records = evaluate_dataset(
        ds,
        config,
        jobs=args.jobs,
        region=args.region,
        floor_percentile=args.floor_percentile,
        out_dir=out_dir,
    )
    for record in records:
        if args.no_timing:
            record.pop("seconds", None)
        _emit(record)
    _emit(aggregate)
    print(
        f"evaluated {aggregate['pairs']} pairs, {aggregate['failures']} failures",
        file=sys.stderr,
    )
    return 2 if aggregate["failures"] else 0


def cmd_metrics(args):
    a = _load_planar(args.reconstruction, None, args.gray, 1)
    b = _load_planar(args.reference, None, args.gray, 1)
    try:
        report = compare(a, b, region=args.region)
    except ValueError as exc:
        raise UsageError(str(exc))
    _emit(report.to_dict())
    return 0


def cmd_psf_report(args):
    psf = _load_psf(args, sidecar=args.psf_sidecar)
    report = psf_report(psf)
    out_path = _resolve_out(args.out)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as f:
            json.dump(report, f, indent=2)
            f.write("\n")
    else:
        _emit(report)
    return 0


def main(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    parser, table = _build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "config", None):
            tokens = _config_tokens(table[args.subcommand], args.config)
            args = parser.parse_args([argv[0], *tokens, *argv[1:]])
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 0
    except UsageError as exc:
        print(f"unlens: error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"unlens: error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"unlens: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure inside the pipeline
        print(f"unlens: runtime failure: {exc}", file=sys.stderr)
        return 2
