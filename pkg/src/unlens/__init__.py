"""Lensless-imaging reconstruction toolkit.

Measurements from a lensless camera are modeled as a crop of the scene
circularly convolved with the system PSF on a zero-padded grid; this
package provides the FFT forward/adjoint operators, a family of
iterative solvers for the regularized inverse problem, raw Bayer
preprocessing, image quality metrics, and paired-dataset evaluation.
"""

from .bayer import BayerFrame, bayer_to_gray, demosaic, load_bayer
from .convolve import ConvolutionOperator, autocorr2d, plan
from .dataset import (
    PairedDataset,
    SimulationConfig,
    evaluate_dataset,
    evaluate_single,
    load_dataset,
    simulate_measurement,
)
from .image import Region, as_image, downsample, extract_region, resize_to, rgb_to_gray
from .io import load_array, load_image, read_raw, save_image, write_raw
from .metrics import MetricReport, compare, mse, psnr, ssim
from .prox import soft_threshold, tv_adjoint, tv_forward
from .psf import Psf, calibrate_psf, psf_report
from .solvers import ALGORITHMS, Reconstruction, SolverConfig, new_reconstruction

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "BayerFrame",
    "ConvolutionOperator",
    "MetricReport",
    "PairedDataset",
    "Psf",
    "Reconstruction",
    "Region",
    "SimulationConfig",
    "SolverConfig",
    "as_image",
    "autocorr2d",
    "bayer_to_gray",
    "calibrate_psf",
    "compare",
    "demosaic",
    "downsample",
    "evaluate_dataset",
    "evaluate_single",
    "extract_region",
    "load_array",
    "load_bayer",
    "load_dataset",
    "load_image",
    "mse",
    "new_reconstruction",
    "plan",
    "psf_report",
    "psnr",
    "read_raw",
    "resize_to",
    "rgb_to_gray",
    "save_image",
    "simulate_measurement",
    "soft_threshold",
    "ssim",
    "tv_adjoint",
    "tv_forward",
    "write_raw",
    "__version__",
]
