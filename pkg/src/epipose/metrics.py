"""MAE, PSNR, and SSIM scoring of predicted vs target images in [0, 1].

SSIM follows the standard reference parameterization: grayscale first
(channel mean), 11x11 Gaussian window with sigma 1.5, C1 = 0.01^2,
C2 = 0.03^2 for unit dynamic range, windows evaluated on the valid region.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d

from .errors import ImageTooSmall, ShapeMismatch
from .spectral import _image_array

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _pair(pred, target):
    p, t = _image_array(pred), _image_array(target)
    if p.shape != t.shape:
        raise ShapeMismatch(f"shapes differ: {p.shape} vs {t.shape}")
    return p, t


def mae(pred, target) -> float:
    """Mean absolute difference over pixels and channels."""
    p, t = _pair(pred, target)
    return float(np.mean(np.abs(p - t)))


def psnr(pred, target) -> float:
    """10*log10(1/MSE) against peak 1.0; +inf when the images are identical."""
    p, t = _pair(pred, target)
    mse = float(np.mean((p - t) ** 2))
    if mse == 0.0:
        return math.inf
    # -log10(mse) rather than log10(1/mse): the reciprocal costs an ulp.
    return float(-10.0 * np.log10(mse))


def _ssim_window():
    i = np.arange(SSIM_WINDOW, dtype=np.float64) - (SSIM_WINDOW - 1) / 2.0
    g = np.exp(-(i**2) / (2.0 * SSIM_SIGMA**2))
    win = np.outer(g, g)
    return win / win.sum()


def ssim(pred, target) -> float:
    """Mean local SSIM of the grayscale (channel-mean) images."""
    p, t = _pair(pred, target)
    gp = p.mean(axis=2)
    gt = t.mean(axis=2)
    h, w = gp.shape
    if h < SSIM_WINDOW or w < SSIM_WINDOW:
        raise ImageTooSmall(f"{h}x{w} image under {SSIM_WINDOW}x{SSIM_WINDOW} window")

    win = _ssim_window()
    c1 = SSIM_K1**2
    c2 = SSIM_K2**2
    mu1 = convolve2d(gp, win, mode="valid")
    mu2 = convolve2d(gt, win, mode="valid")
    s11 = convolve2d(gp * gp, win, mode="valid") - mu1 * mu1
    s22 = convolve2d(gt * gt, win, mode="valid") - mu2 * mu2
    s12 = convolve2d(gp * gt, win, mode="valid") - mu1 * mu2
    ssim_map = ((2.0 * mu1 * mu2 + c1) * (2.0 * s12 + c2)) / (
        (mu1 * mu1 + mu2 * mu2 + c1) * (s11 + s22 + c2)
    )
    return float(ssim_map.mean())


@dataclass(frozen=True)
class MetricReport:
    """All three scores for one image pair."""

    mae: float
    ssim: float
    psnr: float
    ssim_mode: str = "grayscale"


def metric_report(pred, target) -> MetricReport:
    return MetricReport(mae=mae(pred, target), ssim=ssim(pred, target), psnr=psnr(pred, target))
