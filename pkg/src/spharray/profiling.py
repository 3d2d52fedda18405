"""Analytic parameter and FLOP accounting for the frontend and a recurrent baseline.

Counting conventions (also recorded in run manifests):
- one multiply-accumulate = 2 FLOPs;
- one real FFT of size n = 5 * n * log2(n) FLOPs;
- nonlinearities cost 4 FLOPs per element;
- the harmonic mixing stage costs 2 * C * I * L FLOPs on raw samples.

The baseline is a 3-layer bidirectional LSTM mask estimator (320 units per
direction, magnitude-bin input, direction outputs summed between layers, a
complex-mask projection 2h -> 2F) applied once per input channel.  Its LSTM
step is counted as 8 * h * (h + in) MACs per frame per direction per layer
plus a small per-unit gate-nonlinearity allowance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .ssafn import SsafnConfig, _CBAMS_PER_BLOCK, _NUM_BLOCKS
from .stft import StftConfig

MAC_FLOPS = 2
NONLIN_FLOPS = 4
# Per hidden unit, per frame, per direction, per layer: gate nonlinearities
# and the cell's elementwise products/sums.
LSTM_GATE_ALLOWANCE = 24

CONVENTION = (
    "MAC=2 FLOPs; FFT(n)=5*n*log2(n); nonlinearity=4 FLOPs/element; "
    "harmonic mixing=2*C*I*L; LSTM step=8*h*(h+in) MACs/frame/direction/layer "
    "+ 24 FLOPs/unit allowance"
)


def fft_flops(n: int) -> float:
    """FLOPs for one size-n FFT under the stated convention."""
    return 5.0 * n * math.log2(n)


@dataclass(frozen=True)
class LayerCost:
    """One accounted stage: parameter count and FLOPs at a fixed input length."""

    name: str
    params: int
    flops: float


@dataclass(frozen=True)
class CostModel:
    """Per-layer cost breakdown for one model at one input length."""

    model: str
    seconds: float
    layers: tuple[LayerCost, ...]
    convention: str = CONVENTION

    @property
    def total_params(self) -> int:
        return sum(layer.params for layer in self.layers)

    @property
    def total_flops(self) -> float:
        return float(sum(layer.flops for layer in self.layers))

    @property
    def gflops(self) -> float:
        return self.total_flops / 1e9


def num_frames_or_zero(seconds: float, stft: StftConfig) -> int:
    """Frame count for a duration; 0 when the signal is shorter than one frame."""
    samples = int(round(seconds * stft.sample_rate))
    if samples < stft.frame_len:
        return 0
    return 1 + (samples - stft.frame_len) // stft.hop


def _cbam_cost(name: str, config: SsafnConfig, kernel: int, frames: int) -> LayerCost:
    c, f, h = config.channels, config.freq_bins, config.hidden
    tf = frames * f
    params = h * c + c * h + 2 * kernel * kernel
    flops = (
        c * tf  # global average pool
        + MAC_FLOPS * 2 * c * h  # channel MLP
        + NONLIN_FLOPS * (h + c)  # ReLU + sigmoid on the gate path
        + c * tf  # channel gating
        + 2 * c * tf  # mean and max maps
        + MAC_FLOPS * 2 * kernel * kernel * tf  # 2-input-map spatial kernel
        + NONLIN_FLOPS * tf  # spatial sigmoid
        + c * tf  # spatial gating
    )
    return LayerCost(name, params, float(flops))


def _coor_cost(name: str, config: SsafnConfig, frames: int) -> LayerCost:
    c, f, h = config.channels, config.freq_bins, config.hidden
    joint = frames + f
    params = h * c + h + 2 * (c * h + c)
    flops = (
        2 * c * frames * f  # directional pools
        + MAC_FLOPS * h * c * joint + h * joint + NONLIN_FLOPS * h * joint  # reduce
        + MAC_FLOPS * c * h * joint + c * joint + NONLIN_FLOPS * c * joint  # both gates
        + 2 * c * frames * f  # gating
    )
    return LayerCost(name, params, float(flops))


def _rsacc_cost(config: SsafnConfig, frames: int) -> LayerCost:
    c, f, e = config.channels, config.freq_bins, config.embed_dim
    ctf = c * frames * f
    params = 2 * (f * e + e) + (f * 1 + 1)
    flops = (
        (NONLIN_FLOPS + 1) * ctf  # log(a + eps)
        + 5 * ctf  # mean/variance normalization
        + MAC_FLOPS * 2 * frames * c * f * e + 2 * frames * c * e  # Q, K
        + MAC_FLOPS * frames * c * f + frames * c  # V
        + MAC_FLOPS * frames * c * c * e + frames * c * c  # scores + scaling
        + (NONLIN_FLOPS + 2) * frames * c * c  # softmax
        + MAC_FLOPS * frames * c * c  # attention @ V
        + 2 * ctf  # weighted channel sum
    )
    return LayerCost("rsacc", params, float(flops))


def _mhsa_cost(config: SsafnConfig, frames: int) -> LayerCost:
    f, d, heads = config.freq_bins, config.head_dim, config.num_heads
    params = heads * (2 * (f * d + d) + f * f + f) + heads * f * f + f
    per_head = (
        MAC_FLOPS * 2 * frames * f * d + 2 * frames * d  # Q, K
        + MAC_FLOPS * frames * f * f + frames * f  # V
        + MAC_FLOPS * frames * frames * d + frames * frames  # scores + scaling
        + (NONLIN_FLOPS + 2) * frames * frames  # softmax
        + MAC_FLOPS * frames * frames * f  # attention @ V
    )
    flops = (
        heads * per_head
        + MAC_FLOPS * frames * heads * f * f + frames * f  # output projection
        + frames * f  # elementwise gate
    )
    return LayerCost("mhsa", params, float(flops))


def ssafn_layer_costs(config: SsafnConfig, frames: int) -> list[LayerCost]:
    """Per-layer costs of the attention network at a given frame count."""
    layers = []
    if config.joint_attention:
        for b in range(1, _NUM_BLOCKS + 1):
            for j in range(1, _CBAMS_PER_BLOCK + 1):
                kernel = config.cbam_kernels[(b - 1) * _CBAMS_PER_BLOCK + (j - 1)]
                layers.append(_cbam_cost(f"block{b}.cbam{j}", config, kernel, frames))
            layers.append(_coor_cost(f"block{b}.coor", config, frames))
    if config.rsacc:
        layers.append(_rsacc_cost(config, frames))
    if config.mhsa:
        layers.append(_mhsa_cost(config, frames))
    return layers


def shtnet_cost_model(
    seconds: float,
    num_mics: int = 8,
    order: int = 4,
    stft: StftConfig | None = None,
    ssafn: SsafnConfig | None = None,
) -> CostModel:
    """Cost of the full pipeline: harmonic mixing + framewise FFTs + the network."""
    if stft is None:
        stft = StftConfig()
    if ssafn is None:
        ssafn = SsafnConfig()
    samples = int(round(seconds * stft.sample_rate))
    frames = num_frames_or_zero(seconds, stft)
    c = ssafn.channels
    layers = [
        LayerCost("sht_mixing", 0, float(2 * c * num_mics * samples)),
        LayerCost("stft", 0, float(c * frames * fft_flops(stft.fft_size))),
    ]
    layers.extend(ssafn_layer_costs(ssafn, frames))
    return CostModel("shtnet", float(seconds), tuple(layers))


def flops_shtnet(seconds: float, num_mics: int = 8, **kwargs) -> float:
    return shtnet_cost_model(seconds, num_mics, **kwargs).total_flops


def blstm_cost_model(
    seconds: float,
    num_channels: int = 8,
    hidden: int = 320,
    num_layers: int = 3,
    stft: StftConfig | None = None,
) -> CostModel:
    """Cost of the recurrent mask-estimation baseline (see module docstring)."""
    if stft is None:
        stft = StftConfig()
    f = stft.num_bins
    frames = num_frames_or_zero(seconds, stft)
    layers = []
    for layer_idx in range(num_layers):
        width_in = f if layer_idx == 0 else hidden
        params = 2 * (4 * hidden * (width_in + hidden) + 4 * hidden)
        per_frame = (
            MAC_FLOPS * 2 * 8 * hidden * (width_in + hidden)
            + 2 * LSTM_GATE_ALLOWANCE * hidden
        )
        layers.append(
            LayerCost(
                f"blstm{layer_idx + 1}",
                params,
                float(per_frame) * frames * num_channels,
            )
        )
    proj_params = (2 * hidden) * (2 * f) + 2 * f
    proj_flops = MAC_FLOPS * (2 * hidden) * (2 * f) * frames * num_channels
    layers.append(LayerCost("mask_proj", proj_params, float(proj_flops)))
    return CostModel("blstm", float(seconds), tuple(layers))


def flops_blstm_baseline(seconds: float, num_channels: int = 8, **kwargs) -> float:
    return blstm_cost_model(seconds, num_channels, **kwargs).total_flops


def blstm_param_count(hidden: int = 320, num_layers: int = 3, stft: StftConfig | None = None) -> int:
    return blstm_cost_model(0.0, hidden=hidden, num_layers=num_layers, stft=stft).total_params


def flop_reduction(seconds: float = 10.0, num_mics: int = 8) -> float:
    """Fractional FLOP reduction of the pipeline versus the baseline."""
    baseline = flops_blstm_baseline(seconds, num_channels=num_mics)
    return 1.0 - flops_shtnet(seconds, num_mics=num_mics) / baseline


def cost_curve(seconds_list, num_mics: int = 8, models: tuple[str, ...] = ("shtnet", "blstm")):
    """Rows of {model, seconds, gflops} for each requested model and duration."""
    builders = {"shtnet": shtnet_cost_model, "blstm": blstm_cost_model}
    unknown = [m for m in models if m not in builders]
    if unknown:
        raise KeyError(f"unknown models {unknown}; expected subset of {sorted(builders)}")
    rows = []
    for model in models:
        for seconds in seconds_list:
            cm = builders[model](seconds, num_mics)
            rows.append({"model": model, "seconds": float(seconds), "gflops": cm.gflops})
    return rows


def write_cost_csv(rows, fh) -> None:
    """Write curve rows as CSV with the exact header ``model,seconds,gflops``."""
    fh.write("model,seconds,gflops\n")
    for row in rows:
        fh.write(f"{row['model']},{row['seconds']:g},{row['gflops']:.6f}\n")
