"""Image quality metrics against a reference."""

from __future__ import annotations

import math

import numpy as np
from scipy.ndimage import correlate

SNR_CAP_DB = 300.0
_WIN = 11
_SIGMA = 1.5
_K1, _K2 = 0.01, 0.03


def _arrays(reference, test):
    a = np.asarray(getattr(reference, "coeffs", reference), dtype=np.float64)
    b = np.asarray(getattr(test, "coeffs", test), dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"size mismatch: {a.shape} vs {b.shape}")
    return a, b


def snr_db(reference, test) -> float:
    """10 log10(|ref|^2 / |ref - test|^2), capped at 300 dB."""
    a, b = _arrays(reference, test)
    signal = float(np.sum(a * a))
    if signal == 0.0:
        raise ValueError("reference is identically zero")
    noise = float(np.sum((a - b) ** 2))
    if noise == 0.0:
        return SNR_CAP_DB
    return min(SNR_CAP_DB, 10.0 * math.log10(signal / noise))


def _gauss_window() -> np.ndarray:
    r = np.arange(_WIN) - _WIN // 2
    g = np.exp(-(r ** 2) / (2 * _SIGMA ** 2))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(reference, test) -> float:
    """Mean SSIM over all fully-contained 11x11 Gaussian windows.

    The dynamic range is taken from the reference.
    """
    a, b = _arrays(reference, test)
    if a.ndim != 2 or min(a.shape) < _WIN:
        raise ValueError(f"SSIM needs images of at least {_WIN}x{_WIN}")
    span = float(a.max() - a.min())
    if span == 0.0:
        raise ValueError("reference is constant; SSIM dynamic range undefined")
    c1 = (_K1 * span) ** 2
    c2 = (_K2 * span) ** 2
    w = _gauss_window()
    h = _WIN // 2
    crop = (slice(h, a.shape[0] - h), slice(h, a.shape[1] - h))

    def filt(x):
        return correlate(x, w, mode="reflect")[crop]

    mu_a, mu_b = filt(a), filt(b)
    s_aa = filt(a * a) - mu_a * mu_a
    s_bb = filt(b * b) - mu_b * mu_b
    s_ab = filt(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * s_ab + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (s_aa + s_bb + c2)
    # den is 0 only where both windows are flat zeros (constants underflowed)
    safe = np.where(den > 0, den, 1.0)
    return float(np.mean(np.where(den > 0, num / safe, 1.0)))


def error_map(reference, test) -> np.ndarray:
    a, b = _arrays(reference, test)
    return np.abs(a - b)


def block_average(coeffs: np.ndarray, factor: int) -> np.ndarray:
    """Average non-overlapping ``factor`` x ``factor`` blocks."""
    n = coeffs.shape[0]
    if n % factor:
        raise ValueError(f"size {n} is not a multiple of {factor}")
    m = n // factor
    return coeffs.reshape(m, factor, m, factor).mean(axis=(1, 3))
