"""Classical denoising baselines and the non-negativity post-clamp."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .signals import Signal


@dataclass(frozen=True, eq=False)
class FirFilter:
    taps: np.ndarray
    cutoff: float  # cycles per sample, in (0, 0.5)

    @property
    def num_taps(self):
        return self.taps.shape[0]


def design_lowpass(cutoff_hz: float, sample_rate_hz: float, num_taps: int = 65) -> FirFilter:
    """Hamming-windowed sinc low-pass with unit DC gain and exactly symmetric taps."""
    if num_taps < 3 or num_taps % 2 == 0:
        raise ValueError(f"num_taps must be odd and >= 3, got {num_taps}")
    if not 0 < cutoff_hz < sample_rate_hz / 2:
        raise ValueError(f"cutoff {cutoff_hz} Hz outside (0, {sample_rate_hz / 2}) Hz")
    fc = cutoff_hz / sample_rate_hz
    half = num_taps // 2
    k = np.arange(-half, half + 1, dtype=np.float64)
    h = 2 * fc * np.sinc(2 * fc * k) * np.hamming(num_taps)
    h = 0.5 * (h + h[::-1])
    h /= h.sum()
    # renormalizing can break bitwise symmetry by one ulp
    h[half + 1:] = h[:half][::-1]
    return FirFilter(h, fc)


def frequency_response(fir: FirFilter, freqs_hz, sample_rate_hz: float):
    """Magnitude of the discrete-time transfer function at ``freqs_hz``."""
    w = 2 * np.pi * np.asarray(freqs_hz, dtype=np.float64) / sample_rate_hz
    n = np.arange(fir.num_taps)
    return np.abs(np.exp(-1j * np.outer(w, n)) @ fir.taps)


def apply_fir(fir: FirFilter, signal: Signal) -> Signal:
    """Zero-phase filtering: reflect padding and centered taps, same length out."""
    if len(signal) < fir.num_taps:
        raise ValueError(f"signal of length {len(signal)} shorter than {fir.num_taps} taps")
    return signal.with_samples(kernels.reflect_convolve(signal.samples, fir.taps))


def moving_average(signal: Signal, window: int) -> Signal:
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be a positive odd integer, got {window}")
    if window > len(signal):
        raise ValueError(f"window {window} longer than signal ({len(signal)})")
    taps = np.full(window, 1.0 / window)
    return signal.with_samples(kernels.reflect_convolve(signal.samples, taps))


def clamp_nonnegative(signal: Signal) -> Signal:
    return signal.with_samples(np.maximum(signal.samples, 0.0))
