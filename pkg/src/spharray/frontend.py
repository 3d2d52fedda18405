"""The geometry-agnostic encoding frontend.

Multichannel waveforms are mixed into the harmonic domain with a
geometry-derived plan (a time-domain matrix multiply, since the analysis
weights are frequency-independent), then analyzed into a C x T x F magnitude
tensor.  The channel count C = (order + 1)^2 is fixed by the truncation order,
not by the microphone count, which is what makes the downstream network
geometry-agnostic.

Also here: random channel-subset selection (a data-augmentation/inference path
that rebuilds the plan for a subset of mics) and the chunk scheduler used for
streaming-style processing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, SignalError, SubsetError
from .geometry import ArrayGeometry, subset_geometry
from .harmonics import ShtPlan, build_plan
from .stft import StftConfig, stft
from .validation import check_waveforms


def sht_transform(wavs: np.ndarray, plan: ShtPlan) -> np.ndarray:
    """Mix I x L real waveforms into C x L harmonic-domain signals.

    Applies the plan's real packing: channel (n, 0) carries the (real)
    coefficient, channels (n, +m)/(n, -m) carry the real/imaginary parts of
    the order-m coefficient.
    """
    wavs = check_waveforms(wavs)
    if wavs.shape[0] != plan.geometry.num_mics:
        raise ShapeError(
            f"got {wavs.shape[0]} signal channels for a {plan.geometry.num_mics}-mic plan"
        )
    return plan.real_weights @ wavs


def encode_frontend(
    wavs: np.ndarray,
    geometry: ArrayGeometry,
    order: int = 4,
    config: StftConfig | None = None,
    plan: ShtPlan | None = None,
) -> np.ndarray:
    """Full frontend: I x L waveforms -> C x T x F magnitude tensor."""
    if config is None:
        config = StftConfig()
    if plan is None:
        plan = build_plan(geometry, order)
    return np.abs(stft(sht_transform(wavs, plan), config))


@dataclass(frozen=True)
class RandShtPolicy:
    """Random channel-subset policy: subset size uniform on [min_channels, max_channels].

    ``max_channels`` of None means "all available mics".  Draws are reproducible
    from ``seed``; every call with the same policy and inputs selects the same
    subset unless an external Generator is supplied.
    """

    min_channels: int = 2
    max_channels: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.min_channels < 2:
            raise SubsetError(f"min_channels must be >= 2, got {self.min_channels}")
        if self.max_channels is not None and self.max_channels < self.min_channels:
            raise SubsetError(
                f"max_channels ({self.max_channels}) < min_channels ({self.min_channels})"
            )

    def resolve_bounds(self, num_mics: int) -> tuple[int, int]:
        hi = num_mics if self.max_channels is None else self.max_channels
        if hi > num_mics:
            raise SubsetError(f"max_channels ({hi}) exceeds mic count ({num_mics})")
        if self.min_channels > num_mics:
            raise SubsetError(
                f"min_channels ({self.min_channels}) exceeds mic count ({num_mics})"
            )
        return self.min_channels, hi


def draw_subset_indices(
    num_mics: int, policy: RandShtPolicy, rng: np.random.Generator
) -> list[int]:
    """Draw one mic subset: size uniform on the policy bounds, mics uniform
    without replacement, returned in ascending order."""
    lo, hi = policy.resolve_bounds(num_mics)
    size = int(rng.integers(lo, hi + 1))
    indices = np.sort(rng.choice(num_mics, size=size, replace=False))
    return [int(i) for i in indices]


def rand_sht_select(
    wavs: np.ndarray,
    geometry: ArrayGeometry,
    policy: RandShtPolicy,
    order: int = 4,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, ArrayGeometry, ShtPlan]:
    """Draw a random mic subset and rebuild its encoding plan.

    Returns (subset waveforms, subset geometry, plan).  Selected indices keep
    their original relative order, so subset channel k is input channel
    indices[k]; the subset geometry is re-referenced to the subset centroid.
    """
    wavs = check_waveforms(wavs)
    if wavs.shape[0] != geometry.num_mics:
        raise ShapeError(
            f"got {wavs.shape[0]} signal channels for a {geometry.num_mics}-mic geometry"
        )
    if rng is None:
        rng = np.random.default_rng(policy.seed)
    indices = draw_subset_indices(geometry.num_mics, policy, rng)
    sub_geometry = subset_geometry(geometry, indices)
    return wavs[indices], sub_geometry, build_plan(sub_geometry, order)


@dataclass(frozen=True)
class ChunkConfig:
    """Streaming chunk layout in milliseconds.

    Chunks tile the input exactly; each carries up to ``left_ms`` of left
    context (truncated at the stream start).  In train mode chunk lengths are
    drawn uniformly from ``jitter_ms`` and right context of ``right_ms`` is
    attached with probability 0.5 per chunk; in test mode chunks are fixed
    length with no right context.
    """

    chunk_ms: int = 400
    left_ms: int = 800
    right_ms: int = 400
    jitter_ms: tuple[int, int] = (350, 450)

    def __post_init__(self):
        if self.chunk_ms < 1:
            raise SignalError(f"chunk_ms must be >= 1, got {self.chunk_ms}")
        if self.left_ms < 0 or self.right_ms < 0:
            raise SignalError("context lengths must be >= 0")
        lo, hi = self.jitter_ms
        if not (0 < lo <= self.chunk_ms <= hi):
            raise SignalError(
                f"jitter range {self.jitter_ms} must bracket chunk_ms={self.chunk_ms}"
            )


@dataclass(frozen=True)
class ChunkSpan:
    """Sample ranges for one chunk: half-open (start, stop) index pairs."""

    left: tuple[int, int]
    chunk: tuple[int, int]
    right: tuple[int, int]


def split_chunks(
    num_samples: int,
    sample_rate: int,
    config: ChunkConfig | None = None,
    mode: str = "test",
    rng: np.random.Generator | None = None,
    right_context_prob: float = 0.5,
) -> list[ChunkSpan]:
    """Tile ``num_samples`` into chunk descriptors; see ChunkConfig for the layout."""
    if config is None:
        config = ChunkConfig()
    if num_samples < 1:
        raise SignalError(f"num_samples must be >= 1, got {num_samples}")
    if mode not in ("train", "test"):
        raise SignalError(f"mode must be 'train' or 'test', got {mode!r}")
    if mode == "train" and rng is None:
        raise SignalError("train mode needs a seeded Generator for reproducible draws")

    def to_samples(ms: int) -> int:
        return int(round(ms * sample_rate / 1000.0))

    left_len = to_samples(config.left_ms)
    right_len = to_samples(config.right_ms)
    lo, hi = (to_samples(config.jitter_ms[0]), to_samples(config.jitter_ms[1]))
    spans = []
    start = 0
    while start < num_samples:
        if mode == "train":
            length = int(rng.integers(lo, hi + 1))
        else:
            length = to_samples(config.chunk_ms)
        stop = min(start + length, num_samples)
        if mode == "train" and rng.random() < right_context_prob:
            right = (stop, min(stop + right_len, num_samples))
        else:
            right = (stop, stop)
        spans.append(
            ChunkSpan(left=(max(0, start - left_len), start), chunk=(start, stop), right=right)
        )
        start = stop
    return spans
