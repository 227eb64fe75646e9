from .quality import (PSNR_CAP, MetricReport, cc, evaluate, gaussian_window, max_normalize, mssim,
                      pa_mssim, psnr, rie, ssim_map)

__all__ = [
    "MetricReport", "PSNR_CAP", "cc", "evaluate", "gaussian_window", "max_normalize", "mssim",
    "pa_mssim", "psnr", "rie", "ssim_map",
]
