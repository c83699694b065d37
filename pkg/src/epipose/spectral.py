"""Gaussian low/high-frequency decomposition and the training losses.

An image I splits into I_LF = I (*) w_gauss (per channel, symmetric-reflect
boundaries) and I_HF = I - I_LF. The spectral loss is the mean squared
difference of the high-frequency parts; the total training loss is
L1 + lambda * spectral. Means (not sums) keep losses resolution-independent.
"""

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve1d

from .errors import BadKernel, ImageTooSmall, ShapeMismatch

DEFAULT_KERNEL_SIZE = 5
DEFAULT_LAMBDA = 1.0


def _image_array(img):
    data = np.asarray(getattr(img, "data", img), dtype=np.float64)
    if data.ndim == 2:
        data = data[:, :, None]
    if data.ndim != 3:
        raise ValueError(f"expected (H, W[, C]) image, got shape {data.shape}")
    return data


@dataclass(frozen=True)
class GaussianKernel:
    """Separable 2-D Gaussian: mu = (k-1)/2, sigma = (k/(k+1))^2, unit sum."""

    size: int
    mu: float
    sigma: float
    weights: np.ndarray
    weights_1d: np.ndarray


def gaussian_kernel(k_s: int) -> GaussianKernel:
    """Normalized k_s x k_s Gaussian weights from the size-derived mu, sigma."""
    if k_s < 3 or k_s % 2 == 0:
        raise BadKernel(f"kernel size must be odd and >= 3, got {k_s}")
    mu = (k_s - 1) / 2.0
    sigma = (k_s / (k_s + 1)) ** 2
    i = np.arange(k_s, dtype=np.float64)
    w1 = np.exp(-((i - mu) ** 2) / (2.0 * sigma**2))
    w1 /= w1.sum()
    w2 = np.outer(w1, w1)
    w2 /= w2.sum()
    w1.setflags(write=False)
    w2.setflags(write=False)
    return GaussianKernel(k_s, mu, sigma, w2, w1)


def decompose(img, kernel: GaussianKernel):
    """(I_LF, I_HF) with I_LF the separable Gaussian blur and I_HF = I - I_LF."""
    data = _image_array(img)
    h, w = data.shape[:2]
    if h < kernel.size or w < kernel.size:
        raise ImageTooSmall(f"{h}x{w} image under {kernel.size}x{kernel.size} kernel")
    # scipy 'reflect' repeats the edge sample (symmetric padding).
    lf = convolve1d(data, kernel.weights_1d, axis=0, mode="reflect")
    lf = convolve1d(lf, kernel.weights_1d, axis=1, mode="reflect")
    return lf, data - lf


def _decompose_reference(img, kernel: GaussianKernel):
    """Non-separable path (full 2-D kernel); kept as an oracle for the fast path."""
    data = _image_array(img)
    h, w = data.shape[:2]
    if h < kernel.size or w < kernel.size:
        raise ImageTooSmall(f"{h}x{w} image under {kernel.size}x{kernel.size} kernel")
    pad = kernel.size // 2
    padded = np.pad(data, ((pad, pad), (pad, pad), (0, 0)), mode="symmetric")
    lf = np.zeros_like(data)
    for i in range(kernel.size):
        for j in range(kernel.size):
            lf += kernel.weights[i, j] * padded[i : i + h, j : j + w]
    return lf, data - lf


def _check_same_shape(pred, target):
    p, t = _image_array(pred), _image_array(target)
    if p.shape != t.shape:
        raise ShapeMismatch(f"shapes differ: {p.shape} vs {t.shape}")
    return p, t


def spectral_loss(pred, target, kernel: GaussianKernel) -> float:
    """Mean squared difference of the high-frequency components."""
    p, t = _check_same_shape(pred, target)
    _, hf_p = decompose(p, kernel)
    _, hf_t = decompose(t, kernel)
    return float(np.mean((hf_p - hf_t) ** 2))


@dataclass(frozen=True)
class LossReport:
    """L1 term, spectral term, and their weighted total."""

    l1: float
    spectral: float
    total: float
    lam: float


def total_loss(pred, target, lam: float, kernel: GaussianKernel) -> LossReport:
    """L1 + lambda * spectral, all terms meaned over pixels and channels."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    p, t = _check_same_shape(pred, target)
    l1 = float(np.mean(np.abs(p - t)))
    spec = spectral_loss(p, t, kernel)
    return LossReport(l1=l1, spectral=spec, total=l1 + lam * spec, lam=lam)
