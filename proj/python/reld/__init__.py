"""Layered video denoising: sparse plus low-rank split, then per-layer denoising.

Frame sequences are float64 arrays of shape (frames, height, width).
"""

from ._core import (
    ConfigError,
    add_gaussian,
    add_salt_pepper,
    approx_basis,
    default_config,
    denoise_sequence,
    hist_equalize,
    load_frames,
    pcp_decompose,
    project_perp,
    psnr,
    run_baseline_denoise,
    run_lowlight,
    run_reld,
    solve_l1,
    split_frame,
    std_est,
    store_frames,
)

__all__ = [
    "ConfigError",
    "add_gaussian",
    "add_salt_pepper",
    "approx_basis",
    "default_config",
    "denoise_sequence",
    "hist_equalize",
    "load_frames",
    "pcp_decompose",
    "project_perp",
    "psnr",
    "run_baseline_denoise",
    "run_lowlight",
    "run_reld",
    "solve_l1",
    "split_frame",
    "std_est",
    "store_frames",
]
