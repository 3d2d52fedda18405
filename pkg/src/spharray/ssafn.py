"""Deterministic forward pass of the sound-field attention network.

The network maps a C x T x F magnitude tensor to a T x F spectrum through:

1. Two joint-attention blocks.  Each block nests two convolutional block
   attention stages (channel gate from a global-average-pooled MLP, then a
   spatial gate from mean/max maps through one 2-D kernel) inside a coordinate
   attention stage (directional pooling along T and F, a shared reduction
   transform, per-direction sigmoid gates), all on residual sums:
   out = A + coor(A + cbam2(A + cbam1(A))).
2. A refined self-attention channel combination: per frame, query/key
   projections of the log-domain mean-variance-normalized tensor score the
   C x C channel interactions; softmax rows weight a per-channel scalar value,
   and the weighted channel sum collapses C x T x F to T x F.
3. A 2-head self-attention post-filter over the time axis whose output
   multiplies its input elementwise (a learned ratio-mask refinement).

Everything is plain numpy; with fixed weights the pass is bit-reproducible.
Weights live in named float32 tensors (see ``tensor_specs``) and serialize to
the SSAF container: magic ``SSAF``, a JSON manifest (config + name/shape/
offset table), then a little-endian float32 blob.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Mapping, NamedTuple

import numpy as np
from scipy.signal import correlate
from scipy.special import expit as sigmoid

from .errors import NumericDomainError, ShapeError, WeightFormatError
from .validation import check_tensor

EPS = 1e-8

_MAGIC = b"SSAF"
_FORMAT_VERSION = 1

# The architecture has exactly two joint-attention blocks with two
# convolutional-attention stages each; cbam_kernels lists their kernel sizes
# in execution order.
_NUM_BLOCKS = 2
_CBAMS_PER_BLOCK = 2


@dataclass(frozen=True)
class SsafnConfig:
    """Network dimensions.  Defaults give the 25-channel, 257-bin configuration."""

    channels: int = 25
    freq_bins: int = 257
    embed_dim: int = 64
    num_heads: int = 2
    attn_dim: int = 64
    cbam_kernels: tuple[int, int, int, int] = (9, 7, 5, 3)
    reduction: int = 5
    joint_attention: bool = True
    rsacc: bool = True
    mhsa: bool = True

    def __post_init__(self):
        for name in ("channels", "freq_bins", "embed_dim", "num_heads", "attn_dim", "reduction"):
            if int(getattr(self, name)) < 1:
                raise NumericDomainError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.attn_dim % self.num_heads != 0:
            raise NumericDomainError(
                f"attn_dim ({self.attn_dim}) must divide evenly across "
                f"{self.num_heads} heads"
            )
        kernels = tuple(int(k) for k in self.cbam_kernels)
        if len(kernels) != _NUM_BLOCKS * _CBAMS_PER_BLOCK:
            raise NumericDomainError(
                f"cbam_kernels must list {_NUM_BLOCKS * _CBAMS_PER_BLOCK} sizes, got {kernels}"
            )
        if any(k < 1 or k % 2 == 0 for k in kernels):
            raise NumericDomainError(f"cbam_kernels must be odd and positive, got {kernels}")
        object.__setattr__(self, "cbam_kernels", kernels)

    @property
    def hidden(self) -> int:
        """Reduced width of the channel MLPs: floor(C / reduction), at least 1."""
        return max(1, self.channels // self.reduction)

    @property
    def head_dim(self) -> int:
        """Per-head query/key width: attn_dim split across heads."""
        return self.attn_dim // self.num_heads


class TensorSpec(NamedTuple):
    name: str
    shape: tuple[int, ...]
    fan_in: int


def tensor_specs(config: SsafnConfig) -> list[TensorSpec]:
    """Canonical tensor table: name, shape, and fan-in, in serialization order."""
    c, f = config.channels, config.freq_bins
    h = config.hidden
    specs: list[TensorSpec] = []
    if config.joint_attention:
        for b in range(1, _NUM_BLOCKS + 1):
            for j in range(1, _CBAMS_PER_BLOCK + 1):
                k = config.cbam_kernels[(b - 1) * _CBAMS_PER_BLOCK + (j - 1)]
                prefix = f"block{b}.cbam{j}"
                specs.append(TensorSpec(f"{prefix}.channel_mlp.w1", (h, c), c))
                specs.append(TensorSpec(f"{prefix}.channel_mlp.w2", (c, h), h))
                specs.append(TensorSpec(f"{prefix}.spatial_conv.kernel", (2, k, k), 2 * k * k))
            prefix = f"block{b}.coor"
            specs.append(TensorSpec(f"{prefix}.reduce.w", (h, c), c))
            specs.append(TensorSpec(f"{prefix}.reduce.b", (h,), c))
            specs.append(TensorSpec(f"{prefix}.time_gate.w", (c, h), h))
            specs.append(TensorSpec(f"{prefix}.time_gate.b", (c,), h))
            specs.append(TensorSpec(f"{prefix}.freq_gate.w", (c, h), h))
            specs.append(TensorSpec(f"{prefix}.freq_gate.b", (c,), h))
    if config.rsacc:
        e = config.embed_dim
        specs.append(TensorSpec("rsacc.query.w", (f, e), f))
        specs.append(TensorSpec("rsacc.query.b", (e,), f))
        specs.append(TensorSpec("rsacc.key.w", (f, e), f))
        specs.append(TensorSpec("rsacc.key.b", (e,), f))
        specs.append(TensorSpec("rsacc.value.w", (f, 1), f))
        specs.append(TensorSpec("rsacc.value.b", (1,), f))
    if config.mhsa:
        d = config.head_dim
        for head in range(config.num_heads):
            prefix = f"mhsa.head{head}"
            specs.append(TensorSpec(f"{prefix}.query.w", (f, d), f))
            specs.append(TensorSpec(f"{prefix}.query.b", (d,), f))
            specs.append(TensorSpec(f"{prefix}.key.w", (f, d), f))
            specs.append(TensorSpec(f"{prefix}.key.b", (d,), f))
            specs.append(TensorSpec(f"{prefix}.value.w", (f, f), f))
            specs.append(TensorSpec(f"{prefix}.value.b", (f,), f))
        specs.append(TensorSpec("mhsa.out.w", (config.num_heads * f, f), config.num_heads * f))
        specs.append(TensorSpec("mhsa.out.b", (f,), config.num_heads * f))
    return specs


@dataclass
class SsafnWeights:
    """Named float32 tensors plus the config that fixes their shapes."""

    config: SsafnConfig
    tensors: dict[str, np.ndarray]

    def __post_init__(self):
        specs = tensor_specs(self.config)
        expected = {s.name: s.shape for s in specs}
        if set(self.tensors) != set(expected):
            missing = sorted(set(expected) - set(self.tensors))
            extra = sorted(set(self.tensors) - set(expected))
            raise WeightFormatError(
                f"tensor names do not match the config (missing {missing}, extra {extra})"
            )
        for name, shape in expected.items():
            arr = np.asarray(self.tensors[name], dtype=np.float32)
            if arr.shape != shape:
                raise WeightFormatError(
                    f"tensor {name!r} has shape {arr.shape}, expected {shape}"
                )
            self.tensors[name] = arr


def init_weights(config: SsafnConfig, seed: int = 0) -> SsafnWeights:
    """Seeded uniform(-a, a) initialization with a = sqrt(1 / fan_in) per tensor."""
    rng = np.random.default_rng(seed)
    tensors = {}
    for spec in tensor_specs(config):
        bound = math.sqrt(1.0 / spec.fan_in)
        tensors[spec.name] = rng.uniform(-bound, bound, size=spec.shape).astype(np.float32)
    return SsafnWeights(config, tensors)


def param_count(weights: SsafnWeights) -> int:
    """Total number of scalar parameters actually held by ``weights``."""
    return int(sum(arr.size for arr in weights.tensors.values()))


def save_weights(weights: SsafnWeights, path) -> None:
    """Write the SSAF container; the float32 payload round-trips bit-exactly."""
    specs = tensor_specs(weights.config)
    manifest_tensors = []
    payload = bytearray()
    for spec in specs:
        arr = np.ascontiguousarray(weights.tensors[spec.name], dtype="<f4")
        manifest_tensors.append(
            {
                "name": spec.name,
                "shape": list(spec.shape),
                "dtype": "f32",
                "offset": len(payload),
            }
        )
        payload.extend(arr.tobytes())
    manifest = json.dumps(
        {
            "format_version": _FORMAT_VERSION,
            "config": asdict(weights.config),
            "tensors": manifest_tensors,
        }
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(manifest)))
        fh.write(manifest)
        fh.write(bytes(payload))


def load_weights(path) -> SsafnWeights:
    """Read an SSAF container, validating structure against its embedded config."""
    blob = Path(path).read_bytes()
    if len(blob) < 8 or blob[:4] != _MAGIC:
        raise WeightFormatError(f"{path}: not an SSAF weight file")
    (manifest_len,) = struct.unpack_from("<I", blob, 4)
    header_end = 8 + manifest_len
    if header_end > len(blob):
        raise WeightFormatError(f"{path}: truncated manifest")
    try:
        manifest = json.loads(blob[8:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise WeightFormatError(f"{path}: corrupt manifest ({exc})") from exc
    if manifest.get("format_version") != _FORMAT_VERSION:
        raise WeightFormatError(
            f"{path}: unsupported format version {manifest.get('format_version')!r}"
        )
    try:
        raw = dict(manifest["config"])
        raw["cbam_kernels"] = tuple(raw["cbam_kernels"])
        config = SsafnConfig(**raw)
        entries = manifest["tensors"]
    except (KeyError, TypeError, NumericDomainError) as exc:
        raise WeightFormatError(f"{path}: invalid manifest ({exc})") from exc
    payload = blob[header_end:]
    tensors = {}
    for entry in entries:
        try:
            name = entry["name"]
            shape = tuple(int(v) for v in entry["shape"])
            offset = int(entry["offset"])
            dtype = entry["dtype"]
        except (KeyError, TypeError, ValueError) as exc:
            raise WeightFormatError(f"{path}: invalid tensor entry ({exc})") from exc
        if dtype != "f32":
            raise WeightFormatError(f"{path}: tensor {name!r} has unsupported dtype {dtype!r}")
        size = int(np.prod(shape)) if shape else 1
        end = offset + 4 * size
        if offset < 0 or end > len(payload):
            raise WeightFormatError(f"{path}: tensor {name!r} payload out of bounds")
        tensors[name] = np.frombuffer(payload, dtype="<f4", count=size, offset=offset).reshape(
            shape
        ).copy()
    try:
        return SsafnWeights(config, tensors)
    except WeightFormatError as exc:
        raise WeightFormatError(f"{path}: {exc}") from exc


def _subdict(w: Mapping[str, np.ndarray], prefix: str) -> dict[str, np.ndarray]:
    return {k[len(prefix):]: v for k, v in w.items() if k.startswith(prefix)}


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Numerically stable softmax; rows along ``axis`` sum to 1."""
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def cbam_forward(a: np.ndarray, w: Mapping[str, np.ndarray], kernel: int) -> np.ndarray:
    """Convolutional block attention on a C x T x F tensor.

    Channel gate: global average pool -> MLP (C -> hidden -> C) -> sigmoid.
    Spatial gate: channel-mean and channel-max maps through one 2-D
    cross-correlation (2 input maps, zero-padded 'same') -> sigmoid.
    """
    a = check_tensor(a)
    kern = w["spatial_conv.kernel"]
    if kern.shape != (2, kernel, kernel):
        raise ShapeError(f"spatial kernel shape {kern.shape} != (2, {kernel}, {kernel})")
    pooled = a.mean(axis=(1, 2))
    channel_gate = sigmoid(w["channel_mlp.w2"] @ _relu(w["channel_mlp.w1"] @ pooled))
    x = a * channel_gate[:, np.newaxis, np.newaxis]
    mean_map = x.mean(axis=0)
    max_map = x.max(axis=0)
    conv = correlate(mean_map, kern[0], mode="same") + correlate(max_map, kern[1], mode="same")
    return x * sigmoid(conv)[np.newaxis, :, :]


def coor_attention_forward(a: np.ndarray, w: Mapping[str, np.ndarray]) -> np.ndarray:
    """Coordinate attention: directional pooling, shared reduction, per-axis gates."""
    a = check_tensor(a)
    num_frames = a.shape[1]
    time_desc = a.mean(axis=2)
    freq_desc = a.mean(axis=1)
    joint = np.concatenate([time_desc, freq_desc], axis=1)
    reduced = _relu(w["reduce.w"] @ joint + w["reduce.b"][:, np.newaxis])
    time_gate = sigmoid(
        w["time_gate.w"] @ reduced[:, :num_frames] + w["time_gate.b"][:, np.newaxis]
    )
    freq_gate = sigmoid(
        w["freq_gate.w"] @ reduced[:, num_frames:] + w["freq_gate.b"][:, np.newaxis]
    )
    return a * time_gate[:, :, np.newaxis] * freq_gate[:, np.newaxis, :]


def joint_attention_block(
    a: np.ndarray, w: Mapping[str, np.ndarray], kernels: tuple[int, int]
) -> np.ndarray:
    """One residual block: A + coor(A + cbam2(A + cbam1(A)))."""
    x1 = cbam_forward(a, _subdict(w, "cbam1."), kernels[0])
    x2 = cbam_forward(a + x1, _subdict(w, "cbam2."), kernels[1])
    x3 = coor_attention_forward(a + x2, _subdict(w, "coor."))
    return a + x3


def rsacc_forward(
    a: np.ndarray, w: Mapping[str, np.ndarray], return_internals: bool = False
):
    """Self-attention channel combination: C x T x F -> T x F.

    Scores come from the log-domain tensor normalized per (channel, frequency)
    across time; the softmax-weighted per-channel scalars then weight the raw
    input magnitudes in the channel sum.
    """
    a = check_tensor(a)
    if np.any(a + EPS <= 0.0):
        raise NumericDomainError(
            "channel-combination input must stay positive after +1e-8 flooring"
        )
    x = np.log(a + EPS)
    mean = x.mean(axis=1, keepdims=True)
    std = x.std(axis=1, keepdims=True)
    x = (x - mean) / np.maximum(std, EPS)
    x = np.transpose(x, (1, 0, 2))  # (T, C, F)
    q = x @ w["query.w"] + w["query.b"]
    k = x @ w["key.w"] + w["key.b"]
    v = x @ w["value.w"] + w["value.b"]  # (T, C, 1)
    embed_dim = q.shape[-1]
    attn = softmax(q @ np.transpose(k, (0, 2, 1)) / math.sqrt(embed_dim), axis=-1)
    channel_weights = attn @ v  # (T, C, 1)
    out = (np.transpose(channel_weights, (1, 0, 2)) * a).sum(axis=0)
    if return_internals:
        return out, {"attention": attn, "channel_weights": channel_weights}
    return out


def channel_mean_reduce(a: np.ndarray) -> np.ndarray:
    """Ablation replacement for the attention combination: plain channel mean."""
    return check_tensor(a).mean(axis=0)


def mhsa_postfilter(
    x: np.ndarray,
    w: Mapping[str, np.ndarray],
    num_heads: int,
    return_internals: bool = False,
):
    """Multi-head self-attention over time whose output gates the input.

    Per head: queries/keys are head_dim-wide, values keep the full spectral
    width; heads are concatenated and projected back to F.  The result
    multiplies the input elementwise.
    """
    x = np.asarray(x)
    if x.ndim != 2:
        raise ShapeError(f"expected a (T, F) spectrum, got shape {x.shape}")
    heads = []
    attns = []
    for h in range(num_heads):
        q = x @ w[f"head{h}.query.w"] + w[f"head{h}.query.b"]
        k = x @ w[f"head{h}.key.w"] + w[f"head{h}.key.b"]
        v = x @ w[f"head{h}.value.w"] + w[f"head{h}.value.b"]
        attn = softmax(q @ k.T / math.sqrt(q.shape[-1]), axis=-1)
        attns.append(attn)
        heads.append(attn @ v)
    mask = np.concatenate(heads, axis=1) @ w["out.w"] + w["out.b"]
    out = x * mask
    if return_internals:
        return out, {"attention": attns, "mask": mask}
    return out


def ssafn_forward(a: np.ndarray, weights: SsafnWeights, dtype=np.float64) -> np.ndarray:
    """Full network: C x T x F magnitude tensor -> T x F spectrum."""
    config = weights.config
    a = check_tensor(a, config.channels, config.freq_bins).astype(dtype)
    w = {name: arr.astype(dtype) for name, arr in weights.tensors.items()}
    if config.joint_attention:
        for b in range(1, _NUM_BLOCKS + 1):
            kernels = config.cbam_kernels[(b - 1) * _CBAMS_PER_BLOCK:][:_CBAMS_PER_BLOCK]
            a = joint_attention_block(a, _subdict(w, f"block{b}."), kernels)
    if config.rsacc:
        x = rsacc_forward(a, _subdict(w, "rsacc."))
    else:
        x = channel_mean_reduce(a)
    if config.mhsa:
        x = mhsa_postfilter(x, _subdict(w, "mhsa."), config.num_heads)
    return x
