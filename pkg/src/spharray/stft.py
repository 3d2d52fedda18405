"""Short-time Fourier analysis of the harmonic-domain signals.

Frames start at sample 0 with no centering or padding of the signal itself;
each frame is windowed, zero-padded to the FFT size, and transformed with a
real FFT.  A signal of L samples yields T = 1 + floor((L - frame_len) / hop)
frames and F = fft_size / 2 + 1 bins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericDomainError, ShapeError, SignalError

_WINDOWS = ("hann", "rect")


@dataclass(frozen=True)
class StftConfig:
    """Analysis parameters; defaults are 16 kHz, 512-point FFT, 25 ms frames, 10 ms hop."""

    sample_rate: int = 16000
    fft_size: int = 512
    frame_len: int = 400
    hop: int = 160
    window: str = "hann"

    def __post_init__(self):
        if self.sample_rate < 1:
            raise NumericDomainError(f"sample_rate must be >= 1, got {self.sample_rate}")
        if self.fft_size < 1:
            raise NumericDomainError(f"fft_size must be >= 1, got {self.fft_size}")
        if not 0 < self.frame_len <= self.fft_size:
            raise NumericDomainError(
                f"frame_len must be in [1, fft_size={self.fft_size}], got {self.frame_len}"
            )
        if not 0 < self.hop <= self.frame_len:
            raise NumericDomainError(
                f"hop must be in [1, frame_len={self.frame_len}], got {self.hop}"
            )
        if self.window not in _WINDOWS:
            raise NumericDomainError(
                f"window must be one of {_WINDOWS}, got {self.window!r}"
            )

    @property
    def num_bins(self) -> int:
        return self.fft_size // 2 + 1

    def num_frames(self, num_samples: int) -> int:
        if num_samples < self.frame_len:
            raise SignalError(
                f"signal of {num_samples} samples is shorter than one "
                f"{self.frame_len}-sample frame"
            )
        return 1 + (num_samples - self.frame_len) // self.hop

    def window_array(self) -> np.ndarray:
        """The analysis window (periodic Hann or rectangular), length frame_len."""
        if self.window == "rect":
            return np.ones(self.frame_len)
        n = np.arange(self.frame_len)
        return 0.5 - 0.5 * np.cos(2.0 * math.pi * n / self.frame_len)


def frame_signal(signal: np.ndarray, config: StftConfig) -> np.ndarray:
    """Slice (..., L) samples into (..., T, frame_len) overlapping frames."""
    signal = np.asarray(signal)
    num_frames = config.num_frames(signal.shape[-1])
    view = np.lib.stride_tricks.sliding_window_view(signal, config.frame_len, axis=-1)
    return view[..., :: config.hop, :][..., :num_frames, :]


def stft(signal: np.ndarray, config: StftConfig) -> np.ndarray:
    """Complex spectrogram of (L,) or (C, L) samples: (T, F) or (C, T, F)."""
    signal = np.asarray(signal, dtype=float)
    if signal.ndim not in (1, 2):
        raise ShapeError(f"expected (L,) or (C, L) samples, got shape {signal.shape}")
    frames = frame_signal(signal, config) * config.window_array()
    return np.fft.rfft(frames, n=config.fft_size, axis=-1)


def magnitude(spectra: np.ndarray) -> np.ndarray:
    """Elementwise magnitude of a complex spectrogram."""
    return np.abs(spectra)
