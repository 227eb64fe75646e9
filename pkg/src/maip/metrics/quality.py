"""Image-quality metrics for reconstructed conductivity frames."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from itertools import combinations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

C1 = 1e-4
C2 = 9e-4
WINDOW = 7
WINDOW_SIGMA = 0.2
PSNR_FLOOR = 1e-300
PSNR_CAP = 75.0


def gaussian_window(size=WINDOW, sigma=WINDOW_SIGMA):
    """Normalized isotropic Gaussian on window coordinates scaled to [-1, 1]."""
    u = np.linspace(-1.0, 1.0, size)
    w = np.exp(-(u[:, None] ** 2 + u[None, :] ** 2) / (2.0 * sigma ** 2))
    return w / w.sum()


def max_normalize(stack):
    """Divide by the largest absolute value over the whole stack.

    Returns ``(normalized, factor)``. One factor for all frames keeps the
    contrast between frequencies.
    """
    stack = np.asarray(stack, dtype=np.float64)
    factor = float(np.max(np.abs(stack))) if stack.size else 0.0
    if factor == 0.0:
        raise ValueError("cannot max-normalize an all-zero stack")
    return stack / factor, factor


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def rie(pred, truth):
    pred, truth = _pair(pred, truth)
    denom = np.linalg.norm(truth)
    if denom == 0:
        raise ValueError("relative image error is undefined for an all-zero ground truth")
    return float(np.linalg.norm(pred - truth) / denom)


def cc(pred, truth):
    pred, truth = _pair(pred, truth)
    p = pred - pred.mean()
    g = truth - truth.mean()
    denom = np.linalg.norm(p) * np.linalg.norm(g)
    if denom == 0:
        raise ValueError("correlation is undefined for a constant image")
    return float(np.sum(p * g) / denom)


def psnr(pred, truth):
    """Quarter-scaled PSNR, ``log10(H*W / ||pred - truth||_F**2) / 4``.

    A squared error below 1e-300 returns ``PSNR_CAP`` (75, the formula's
    value for a single pixel at that error).
    """
    pred, truth = _pair(pred, truth)
    h, w = pred.shape
    err = float(np.sum((pred - truth) ** 2))
    if err < PSNR_FLOOR:
        return PSNR_CAP
    return float(0.25 * np.log10(h * w / err))


def ssim_map(pred, truth, window=None):
    """SSIM of every valid stride-1 window position."""
    pred, truth = _pair(pred, truth)
    w = gaussian_window() if window is None else window
    k = w.shape[0]
    if pred.ndim != 2 or min(pred.shape) < k:
        raise ValueError(f"images must be 2D and at least {k}x{k}, got {pred.shape}")
    pw = sliding_window_view(pred, (k, k))
    gw = sliding_window_view(truth, (k, k))
    mp = np.einsum("ijab,ab->ij", pw, w)
    mg = np.einsum("ijab,ab->ij", gw, w)
    dp = pw - mp[..., None, None]
    dg = gw - mg[..., None, None]
    vp = np.einsum("ijab,ab->ij", dp * dp, w)
    vg = np.einsum("ijab,ab->ij", dg * dg, w)
    cov = np.einsum("ijab,ab->ij", dp * dg, w)
    return ((2 * mp * mg + C1) * (2 * cov + C2)) / ((mp ** 2 + mg ** 2 + C1) * (vp + vg + C2))


def mssim(pred, truth):
    return float(ssim_map(pred, truth).mean())


def pa_mssim(frames):
    """Mean MSSIM over all unordered pairs of frames."""
    frames = [np.asarray(f, dtype=np.float64) for f in frames]
    if len(frames) < 2:
        raise ValueError("pairwise MSSIM needs at least two frames")
    return float(np.mean([mssim(a, b) for a, b in combinations(frames, 2)]))


@dataclass
class MetricReport:
    rie: list
    cc: list
    psnr: list
    mssim: list
    pa_mssim: float | None
    normalization: dict = field(default_factory=dict)

    FIELDS = ("frame", "rie", "cc", "psnr", "mssim")

    def to_dict(self):
        return asdict(self)

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def rows(self):
        return [dict(frame=i, rie=self.rie[i], cc=self.cc[i], psnr=self.psnr[i],
                     mssim=self.mssim[i]) for i in range(len(self.rie))]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=self.FIELDS)
            writer.writeheader()
            writer.writerows(self.rows())

    def summary(self):
        out = {k: float(np.mean(getattr(self, k))) for k in ("rie", "cc", "psnr", "mssim")}
        out["pa_mssim"] = self.pa_mssim
        return out


def evaluate(pred_frames, truth_frames):
    """Max-normalize both stacks, then score every frame.

    Inputs are (L, H, W) rasters. PA-MSSIM is computed on the normalized
    prediction and is None for a single frame.
    """
    pred, truth = _pair(pred_frames, truth_frames)
    if pred.ndim == 2:
        pred, truth = pred[None], truth[None]
    pn, fp = max_normalize(pred)
    gn, fg = max_normalize(truth)
    report = MetricReport(
        rie=[rie(p, g) for p, g in zip(pn, gn)],
        cc=[cc(p, g) for p, g in zip(pn, gn)],
        psnr=[psnr(p, g) for p, g in zip(pn, gn)],
        mssim=[mssim(p, g) for p, g in zip(pn, gn)],
        pa_mssim=pa_mssim(pn) if len(pn) > 1 else None,
        normalization={"prediction": fp, "truth": fg, "scope": "stack"},
    )
    return report
