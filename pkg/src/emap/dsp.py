"""Signal primitives shared by the cloud and edge sides.

Everything here operates on plain 1-D float arrays at a fixed 256 Hz
sampling rate: a windowed-sinc bandpass for preprocessing, normalized
cross-correlation (the expensive cloud-side comparison), and the
absolute-difference area (the cheap edge-side proxy).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SAMPLE_RATE_HZ = 256
WINDOW_LEN = 256

# Cost model for one 256-sample comparison, used to justify pushing the
# per-iteration work onto the area metric: area needs a subtract, an abs
# and an add per sample, while correlation needs three full multiply-add
# dot products plus two square roots and a division.
AREA_OPS_PER_WINDOW = 3 * WINDOW_LEN
XCORR_OPS_PER_WINDOW = 3 * (2 * WINDOW_LEN) + 3


class DegenerateSignalError(ValueError):
    """A window with zero energy cannot be correlation-normalized."""


@dataclass
class SignalWindow:
    """One second of live signal: 256 samples plus the time-step index
    N saying which second of the stream they cover."""
    samples: np.ndarray
    timestep_index: int = 0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.shape != (WINDOW_LEN,):
            raise ValueError(
                f"a window holds exactly {WINDOW_LEN} samples, "
                f"got shape {self.samples.shape}")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("window contains non-finite samples")
        if self.timestep_index < 0:
            raise ValueError("timestep_index must be >= 0")


def window_samples(w) -> np.ndarray:
    """Accept a SignalWindow or bare array and return the 256 samples."""
    x = w.samples if hasattr(w, "samples") else np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (WINDOW_LEN,):
        raise ValueError(
            f"expected {WINDOW_LEN} samples, got shape {x.shape}")
    return x


def design_bandpass(low_hz: float = 11.0, high_hz: float = 40.0,
                    fs: float = float(SAMPLE_RATE_HZ), num_taps: int = 100):
    """Design a Hamming-windowed sinc FIR bandpass.

    Parameters
    ----------
    low_hz, high_hz : float
        Band edges in Hz. Must satisfy 0 < low < high < fs / 2.
    fs : float
        Sampling rate in Hz.
    num_taps : int
        Filter length. 100 taps gives a transition narrow enough to hold
        the passband within a few dB while attenuating 5 Hz and 60 Hz
        tones by well over an order of magnitude.

    Returns
    -------
    numpy.ndarray
        ``num_taps`` coefficients, symmetric (linear phase).
    """
    if not (0.0 < low_hz < high_hz < fs / 2.0):
        raise ValueError(
            f"band edges must satisfy 0 < low < high < fs/2, "
            f"got ({low_hz}, {high_hz}) at fs={fs}")
    if num_taps < 2:
        raise ValueError("num_taps must be at least 2")
    m = num_taps - 1
    n = np.arange(num_taps, dtype=np.float64) - m / 2.0

    def lowpass(fc):
        return 2.0 * fc / fs * np.sinc(2.0 * fc * n / fs)

    taps = (lowpass(high_hz) - lowpass(low_hz)) * np.hamming(num_taps)
    return taps


def apply_filter(x, taps):
    """Causal FIR convolution with an implicit zero history.

    Returns y with ``y[k] = sum_i taps[i] * x[k - i]``, same length as
    ``x``; samples before the start are taken as zero, so the first
    ``len(taps)`` output samples are warm-up and should not be used for
    measurements.
    """
    x = np.asarray(x, dtype=np.float64)
    taps = np.asarray(taps, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("expected a 1-D signal")
    if x.size == 0:
        return x.copy()
    return np.convolve(x, taps)[: x.size]


def resample(x, source_hz: float, target_hz: float):
    """Linearly resample a signal onto a new uniform sample grid.

    Output length is round(len(x) * target_hz / source_hz), so duration
    is preserved to within one sample period. Values beyond the last
    source sample clamp to it. A same-rate call returns the input
    unchanged (copied) so identity ingestion stays bit-exact.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("expected a non-empty 1-D signal")
    if source_hz <= 0 or target_hz <= 0:
        raise ValueError("sample rates must be positive")
    if source_hz == target_hz:
        return x.copy()
    n_out = int(round(x.size * float(target_hz) / float(source_hz)))
    t_out = np.arange(n_out, dtype=np.float64) / float(target_hz)
    t_in = np.arange(x.size, dtype=np.float64) / float(source_hz)
    return np.interp(t_out, t_in, x)


def xcorr(a, b) -> float:
    """Normalized cross-correlation of two equal-length windows.

    Returns dot(a, b) / (||a|| * ||b||), in [-1, 1]. Raises
    DegenerateSignalError if either window has zero energy.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"window shapes differ: {a.shape} vs {b.shape}")
    ea = float(np.dot(a, a))
    eb = float(np.dot(b, b))
    if ea == 0.0 or eb == 0.0:
        raise DegenerateSignalError("zero-energy window in correlation")
    # sqrt of the energy product (not product of sqrts) so that a window
    # correlated with itself scores exactly 1.0
    return float(np.dot(a, b)) / math.sqrt(ea * eb)


def area_between(a, b) -> float:
    """Sum of absolute sample differences between two equal-length windows.

    This is the cheap dissimilarity the edge tracks in real time; see
    AREA_OPS_PER_WINDOW vs XCORR_OPS_PER_WINDOW for the per-window cost
    gap that motivates it. fsum keeps the result exactly the correctly
    rounded value of the true sum, independent of summation order.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"window shapes differ: {a.shape} vs {b.shape}")
    return math.fsum(np.abs(a - b))
