"""Input-validation helpers shared by the functional core and the estimators."""

from __future__ import annotations

import numpy as np

from .errors import NumericDomainError, ShapeError


def check_waveforms(wavs, num_channels: int | None = None) -> np.ndarray:
    """Validate an I x L float waveform block: 2-D, finite, non-empty."""
    arr = np.asarray(wavs, dtype=float)
    if arr.ndim != 2:
        raise ShapeError(f"expected an (I, L) waveform array, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"waveform array must be non-empty, got shape {arr.shape}")
    if num_channels is not None and arr.shape[0] != num_channels:
        raise ShapeError(f"expected {num_channels} channels, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise NumericDomainError("waveforms must be finite (no NaN/Inf)")
    return arr


def check_tensor(a, num_channels: int | None = None, num_bins: int | None = None) -> np.ndarray:
    """Validate a C x T x F tensor: 3-D, finite, optionally with pinned C and F."""
    arr = np.asarray(a)
    if arr.ndim != 3:
        raise ShapeError(f"expected a (C, T, F) tensor, got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise ShapeError(f"tensor must be non-empty, got shape {arr.shape}")
    if num_channels is not None and arr.shape[0] != num_channels:
        raise ShapeError(f"expected C={num_channels} channels, got {arr.shape[0]}")
    if num_bins is not None and arr.shape[2] != num_bins:
        raise ShapeError(f"expected F={num_bins} bins, got {arr.shape[2]}")
    if not np.all(np.isfinite(arr)):
        raise NumericDomainError("tensor values must be finite (no NaN/Inf)")
    return arr
