"""File formats: multichannel WAV and the SHT1 binary tensor container.

WAV support covers PCM 16-bit (scaled to [-1, 1) floats) and IEEE float32.
Tensors serialize as: magic ``SHT1`` | u32 rank | u32 dims[rank] | u8 dtype
code (1 = float32) | row-major little-endian float32 payload.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .errors import FileFormatError

_TENSOR_MAGIC = b"SHT1"
_DTYPE_F32 = 1
_PCM16_SCALE = 32768.0


def read_wav(path) -> tuple[int, np.ndarray]:
    """Read a WAV file as (sample_rate, I x L float64 array).

    PCM16 samples are scaled by 1/32768; float32 samples pass through.
    """
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        raise FileFormatError(f"{path}: unreadable WAV ({exc})") from exc
    if data.dtype == np.int16:
        wavs = data.astype(float) / _PCM16_SCALE
    elif data.dtype == np.float32:
        wavs = data.astype(float)
    else:
        raise FileFormatError(
            f"{path}: unsupported WAV sample format {data.dtype}; "
            "expected PCM 16-bit or IEEE float32"
        )
    if wavs.ndim == 1:
        wavs = wavs[np.newaxis, :]
    else:
        wavs = wavs.T  # WAV frames are (L, I); channels first internally
    return int(rate), wavs


def write_wav(path, sample_rate: int, wavs: np.ndarray, fmt: str = "float32") -> None:
    """Write an I x L array as a WAV file (``fmt``: 'float32' or 'pcm16')."""
    wavs = np.asarray(wavs)
    if wavs.ndim != 2:
        raise FileFormatError(f"expected an (I, L) array, got shape {wavs.shape}")
    frames = wavs.T
    if frames.shape[1] == 1:
        frames = frames[:, 0]
    if fmt == "float32":
        wavfile.write(path, sample_rate, frames.astype(np.float32))
    elif fmt == "pcm16":
        clipped = np.clip(frames, -1.0, 1.0 - 1.0 / _PCM16_SCALE)
        wavfile.write(path, sample_rate, np.round(clipped * _PCM16_SCALE).astype(np.int16))
    else:
        raise FileFormatError(f"unsupported WAV format {fmt!r}")


def write_tensor(path, array: np.ndarray) -> None:
    """Write an array to the SHT1 container as float32."""
    arr = np.ascontiguousarray(array, dtype="<f4")
    if arr.ndim < 1:
        arr = arr.reshape(1)
    with open(path, "wb") as fh:
        fh.write(_TENSOR_MAGIC)
        fh.write(struct.pack("<I", arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        fh.write(struct.pack("<B", _DTYPE_F32))
        fh.write(arr.tobytes())


def read_tensor(path) -> np.ndarray:
    """Read an SHT1 container back as a float32 array."""
    blob = Path(path).read_bytes()
    if len(blob) < 9 or blob[:4] != _TENSOR_MAGIC:
        raise FileFormatError(f"{path}: not an SHT1 tensor file")
    (rank,) = struct.unpack_from("<I", blob, 4)
    header_end = 8 + 4 * rank + 1
    if rank < 1 or rank > 32 or len(blob) < header_end:
        raise FileFormatError(f"{path}: invalid tensor rank {rank}")
    dims = struct.unpack_from(f"<{rank}I", blob, 8)
    (dtype_code,) = struct.unpack_from("<B", blob, 8 + 4 * rank)
    if dtype_code != _DTYPE_F32:
        raise FileFormatError(f"{path}: unsupported dtype code {dtype_code}")
    count = int(np.prod(dims))
    if len(blob) - header_end != 4 * count:
        raise FileFormatError(
            f"{path}: payload is {len(blob) - header_end} bytes, dims {dims} need {4 * count}"
        )
    return np.frombuffer(blob, dtype="<f4", count=count, offset=header_end).reshape(dims).copy()
