"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as
they happen. Criterion 10 needs a local copy of the public measured
dataset subset and is skipped unless UNLENS_SUBSET_DIR points at it.
"""

import json
import os
import time

import numpy as np
import pytest

from unlens.cli import main
from unlens.convolve import autocorr2d, plan
from unlens.dataset import (
    SimulationConfig,
    evaluate_dataset,
    load_dataset,
    simulate_measurement,
)
from unlens.io import write_raw
from unlens.metrics import compare, mse, psnr, ssim
from unlens.prox import tv_adjoint, tv_forward
from unlens.psf import calibrate_psf
from unlens.solvers import SolverConfig, new_reconstruction

from oracles import dense_forward_matrix, direct_autocorr, direct_forward


def _verdict(n, ok, detail=""):
    tag = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"criterion {n}: {tag}{suffix}")
    assert ok, f"criterion {n} failed: {detail}"


def _spread_psf(rng, h, w, spikes):
    img = np.zeros((1, h, w))
    idx = rng.integers(0, h * w, size=spikes)
    img.flat[idx] = rng.random(spikes) + 0.5
    return calibrate_psf(img)


def test_criterion_1_operator_matches_direct_convolution():
    started = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for trial in range(50):
        h = int(rng.choice([4, 8, 16]))
        w = int(rng.choice([4, 8, 16]))
        c = int(rng.choice([1, 3]))
        psf = calibrate_psf(rng.random((c, h, w)) + 1e-3)
        x = rng.standard_normal((c, h, w))
        got = plan(psf).apply(x)
        want = direct_forward(psf.image, x)
        worst = max(worst, np.linalg.norm(got - want) / np.linalg.norm(want))
    elapsed = time.perf_counter() - started
    _verdict(1, worst <= 1e-8 and elapsed < 10.0,
             f"max rel err {worst:.2e}, {elapsed:.1f} s")


def test_criterion_2_adjoint_identity():
    rng = np.random.default_rng(102)
    worst = 0.0
    for trial in range(100):
        h = int(rng.integers(4, 17))
        w = int(rng.integers(4, 17))
        c = int(rng.choice([1, 3]))
        mode = "real" if trial % 2 == 0 else "complex"
        op = plan(calibrate_psf(rng.random((c, h, w)) + 1e-3), fft_mode=mode)
        x = rng.standard_normal((c, h, w))
        y = rng.standard_normal((c, h, w))
        lhs = np.vdot(op.apply(x), y)
        rhs = np.vdot(x, op.adjoint(y))
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-30))
        # TV operator adjoint over the same trial sizes
        g = rng.standard_normal((2, c, h, w))
        lhs = np.vdot(tv_forward(x), g)
        rhs = np.vdot(x, tv_adjoint(g))
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-30))
    _verdict(2, worst <= 1e-8, f"max rel err {worst:.2e}")


def test_criterion_3_real_fft_speed_and_equality():
    rng = np.random.default_rng(103)
    h = w = 512
    psf = calibrate_psf(rng.random((1, h, w)))
    y = plan(psf).apply(rng.random((1, h, w)))
    medians = {}
    outputs = {}
    for mode in ("real", "complex"):
        cfg = SolverConfig(algorithm="admm", n_iter=5, fft_mode=mode)
        times = []
        for _ in range(5):
            rec = new_reconstruction(psf, cfg)
            rec.set_data(y)
            t0 = time.perf_counter()
            outputs[mode] = rec.apply()
            times.append(time.perf_counter() - t0)
        medians[mode] = sorted(times)[2]
    diff = float(np.max(np.abs(outputs["real"] - outputs["complex"])))
    speedup = medians["complex"] / medians["real"]
    _verdict(3, diff <= 1e-8 and speedup >= 1.2,
             f"max abs diff {diff:.2e}, speedup {speedup:.2f}x")


def test_criterion_4_solvers_reach_least_squares_oracle():
    started = time.perf_counter()
    rng = np.random.default_rng(104)
    h = w = 4
    img = np.zeros((1, h, w))
    img[0, 2, 2] = 1.0
    img[0] += 0.05 * rng.random((h, w))
    psf = calibrate_psf(img)
    A = dense_forward_matrix(psf.image[0])
    y = direct_forward(psf.image, rng.random((1, h, w)))
    x_ls = np.linalg.lstsq(A, y.ravel(), rcond=None)[0]
    norm = np.linalg.norm(x_ls)

    errs = {}
    cfg = SolverConfig(algorithm="admm", n_iter=1000, tv_weight=0.0,
                       nonneg=False, mu1=1.0, mu2=1.0, mu3=1.0)
    rec = new_reconstruction(psf, cfg)
    rec.set_data(y)
    rec.apply()
    errs["admm"] = np.linalg.norm(rec.iterate.ravel() - x_ls) / norm
    for algo in ("fista", "gd"):
        rec = new_reconstruction(psf, SolverConfig(algorithm=algo, n_iter=2000,
                                                   nonneg=False))
        rec.set_data(y)
        rec.apply()
        errs[algo] = np.linalg.norm(rec.iterate.ravel() - x_ls) / norm
    elapsed = time.perf_counter() - started
    ok = all(e <= 1e-4 for e in errs.values()) and elapsed < 30.0
    detail = ", ".join(f"{k} {v:.2e}" for k, v in errs.items())
    _verdict(4, ok, f"{detail}, {elapsed:.1f} s")


def test_criterion_5_fista_beats_gd_at_fixed_budget():
    rng = np.random.default_rng(105)
    psf = _spread_psf(rng, 32, 32, 60)
    scene = rng.random((1, 32, 32))
    scene /= scene.max()
    y = simulate_measurement(scene, psf, SimulationConfig(snr_db=30.0, seed=0))
    finals = {}
    for algo in ("fista", "gd"):
        rec = new_reconstruction(psf, SolverConfig(algorithm=algo, n_iter=300))
        rec.set_data(y)
        rec.apply()
        finals[algo] = rec.objective_history[-1]
    _verdict(5, finals["fista"] <= finals["gd"],
             f"fista {finals['fista']:.6e} vs gd {finals['gd']:.6e}")


def test_criterion_6_reconstruction_gain_over_raw():
    started = time.perf_counter()
    rng = np.random.default_rng(106)
    h = w = 64
    psf = _spread_psf(rng, h, w, 120)
    cfg = SolverConfig(algorithm="admm", n_iter=100, tv_weight=1e-5,
                       mu1=0.1, mu2=0.1, mu3=0.1)
    raw_psnrs = []
    rec_psnrs = []
    for k in range(10):
        scene = np.zeros((1, h, w))
        scene[0, 8:56, 8:56] = rng.random((48, 48))
        scene /= scene.max()
        y = simulate_measurement(scene, psf, SimulationConfig(snr_db=40.0, seed=k))
        raw_psnrs.append(compare(y, scene).psnr_db)
        rec = new_reconstruction(psf, cfg)
        rec.set_data(y)
        rec_psnrs.append(compare(rec.apply(), scene).psnr_db)
    gain = np.mean(rec_psnrs) - np.mean(raw_psnrs)
    elapsed = time.perf_counter() - started
    _verdict(6, gain >= 3.0 and elapsed < 120.0,
             f"gain {gain:.2f} dB, {elapsed:.1f} s")


def test_criterion_7_metric_closed_forms():
    rng = np.random.default_rng(107)
    checks = []
    # case 1: constant offset, mse is the squared offset
    a = np.zeros((1, 16, 16))
    b = np.full((1, 16, 16), 0.5)
    checks.append(abs(mse(a, b) - 0.25) <= 1e-10)
    # case 2: psnr of a 0.1 offset against peak 1 is exactly 20 dB
    checks.append(abs(psnr(a, np.full((1, 16, 16), 0.1)) - 20.0) <= 1e-10)
    # case 3: identity, mse 0 and ssim 1
    x = rng.random((1, 16, 16))
    checks.append(mse(x, x) == 0.0 and abs(ssim(x, x) - 1.0) <= 1e-10)
    # case 4: constant flats, ssim reduces to the luminance term
    a = np.full((1, 16, 16), 0.4)
    b = np.full((1, 16, 16), 0.6)
    c1 = 1e-4
    want = (2 * 0.4 * 0.6 + c1) / (0.4**2 + 0.6**2 + c1)
    checks.append(abs(ssim(a, b) - want) <= 1e-10)
    # case 5: binary inversion, mse 1 and luminance-only ssim formula
    x = np.zeros((1, 16, 16))
    x[0, ::2] = 1.0
    inv = 1.0 - x
    checks.append(abs(mse(x, inv) - 1.0) <= 1e-10)
    _verdict(7, all(checks), f"{sum(checks)}/5 cases")


def test_criterion_8_autocorrelation_oracle():
    rng = np.random.default_rng(108)
    worst = 0.0
    zero_lag_ok = True
    for h in range(1, 9):
        for w in range(1, 9):
            x = rng.standard_normal((h, w))
            got = autocorr2d(x)
            worst = max(worst, float(np.max(np.abs(got - direct_autocorr(x)))))
            if abs(got[h - 1, w - 1] - np.sum(x * x)) > 1e-10:
                zero_lag_ok = False
    _verdict(8, worst <= 1e-10 and zero_lag_ok, f"max abs err {worst:.2e}")


def test_criterion_9_cli_byte_determinism(tmp_path, capsys):
    rng = np.random.default_rng(109)
    psf = _spread_psf(rng, 32, 32, 60)
    scene = np.zeros((1, 32, 32))
    scene[0, 4:28, 4:28] = rng.random((24, 24))
    scene /= scene.max()
    psf_path = tmp_path / "psf.lpc1"
    scene_path = tmp_path / "scene.lpc1"
    write_raw(psf.image, psf_path)
    write_raw(scene, scene_path)
    root = tmp_path / "ds"
    (root / "diffuser").mkdir(parents=True)
    (root / "lensed").mkdir()
    write_raw(psf.image, root / "psf.lpc1")
    for k in range(2):
        y = simulate_measurement(scene, psf, SimulationConfig(snr_db=40.0, seed=k))
        write_raw(y, root / "diffuser" / f"p{k}.lpc1")
        write_raw(scene, root / "lensed" / f"p{k}.lpc1")

    commands = {
        "simulate": ["simulate", "--scene", str(scene_path), "--psf", str(psf_path),
                     "--snr-db", "35", "--seed", "4",
                     "--out", str(tmp_path / "sim.lpc1")],
        "recon": ["recon", "--psf", str(psf_path),
                  "--data", str(root / "diffuser" / "p0.lpc1"),
                  "--algo", "admm", "--n-iter", "10", "--no-timing"],
        "evaluate": ["evaluate", "--root", str(root), "--algo", "gd",
                     "--n-iter", "5", "--no-timing"],
    }
    ok = True
    details = []
    for name, argv in commands.items():
        outputs = []
        for _ in range(2):
            code = main(list(argv))
            captured = capsys.readouterr()
            outputs.append(captured.out)
            if code != 0:
                ok = False
                details.append(f"{name} exit {code}")
        if outputs[0] != outputs[1]:
            ok = False
            details.append(f"{name} differs")
    _verdict(9, ok, "; ".join(details) if details else "3 commands byte-identical")


@pytest.mark.skipif(
    "UNLENS_SUBSET_DIR" not in os.environ,
    reason="UNLENS_SUBSET_DIR not set; measured-data subset unavailable",
)
def test_criterion_10_measured_subset_reproduction():
    root = os.environ["UNLENS_SUBSET_DIR"]
    ds = load_dataset(root, downsample=4)
    cfg = SolverConfig(algorithm="admm", n_iter=100)
    aggregate, _ = evaluate_dataset(ds, cfg, jobs=4)
    targets = {"mse": 0.0797, "psnr_db": 12.7, "ssim": 0.535}
    ok = True
    details = []
    for key, target in targets.items():
        value = aggregate[key]
        rel = abs(value - target) / target
        details.append(f"{key} {value:.4g} vs {target} ({rel * 100:.0f}%)")
        if rel > 0.20:
            ok = False
    _verdict(10, ok, "; ".join(details))
