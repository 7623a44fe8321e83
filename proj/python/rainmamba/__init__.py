"""Video deraining building blocks: space-filling scan orders, state-space scans,
the seeded forward pass, rain synthesis and quality metrics."""

from ._core import (
    RainMambaError,
    charbonnier,
    derain,
    flatten,
    locality_report,
    psnr,
    run_cli,
    scan_convolution,
    scan_order,
    scan_recurrent,
    schedule,
    ssim,
    ssm_check,
    synthetic_scene,
    unflatten,
)

__all__ = [
    "RainMambaError",
    "charbonnier",
    "derain",
    "flatten",
    "locality_report",
    "psnr",
    "run_cli",
    "scan_convolution",
    "scan_order",
    "scan_recurrent",
    "schedule",
    "ssim",
    "ssm_check",
    "synthetic_scene",
    "unflatten",
]
