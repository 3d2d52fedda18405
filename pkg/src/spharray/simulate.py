"""Far-field plane-wave rendering onto microphone arrays.

A source arriving from unit direction u (pointing from the array toward the
source) reaches mic i with delay tau_i = -(u . x_i) / c seconds: mics on the
source side of the array hear it early.  Delays are applied as exact linear
phase in the frequency domain on a zero-padded buffer (padding >= the largest
delay magnitude, buffer length kept odd so there is no Nyquist bin and the
phase factor is exactly unitary).

``plane_wave_amplitudes`` exposes the same delay model as per-mic complex
amplitudes at a single frequency, e^{-i 2 pi f tau_i}; that is the spatial
plane-wave field the harmonic analysis sees, and what the steering tests use.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FileFormatError, GeometryError, SignalError
from .geometry import ArrayGeometry, load_geometry

SPEED_OF_SOUND = 343.0


def direction_unit(theta: float, phi: float) -> np.ndarray:
    """Unit vector for arrival direction (theta, phi), array -> source."""
    sin_t = math.sin(theta)
    return np.array([sin_t * math.cos(phi), sin_t * math.sin(phi), math.cos(theta)])


@dataclass(frozen=True)
class PlaneWaveSource:
    """A far-field source: arrival direction (radians), mono samples, linear gain."""

    theta: float
    phi: float
    signal: np.ndarray
    gain: float = 1.0

    def __post_init__(self):
        sig = np.asarray(self.signal, dtype=float)
        if sig.ndim != 1 or sig.size < 1:
            raise SignalError(f"source signal must be a non-empty 1-D array, got {sig.shape}")
        if not np.all(np.isfinite(sig)):
            raise SignalError("source signal must be finite")
        if not math.isfinite(self.gain):
            raise SignalError(f"gain must be finite, got {self.gain!r}")
        sig.setflags(write=False)
        object.__setattr__(self, "signal", sig)


def fractional_delay(signal: np.ndarray, delay_samples: float, pad: int | None = None) -> np.ndarray:
    """Delay a real signal by a (fractional) number of samples via linear phase.

    Returns the full padded buffer (length L + pad, forced odd).  ``pad`` must
    cover |delay_samples| so the circular shift never wraps signal content;
    by default it is ceil(|delay|) + 1.  The operation is exactly unit-gain.
    """
    signal = np.asarray(signal, dtype=float)
    if signal.ndim != 1 or signal.size < 1:
        raise SignalError(f"signal must be a non-empty 1-D array, got {signal.shape}")
    if not math.isfinite(delay_samples):
        raise SignalError(f"delay must be finite, got {delay_samples!r}")
    min_pad = math.ceil(abs(delay_samples)) + 1
    if pad is None:
        pad = min_pad
    elif pad < min_pad:
        raise SignalError(f"pad ({pad}) must cover the delay (need >= {min_pad})")
    total = signal.size + pad
    if total % 2 == 0:
        total += 1  # odd length: no Nyquist bin, so the phase factor is unitary
    spectrum = np.fft.rfft(signal, n=total)
    bins = np.arange(spectrum.size)
    spectrum *= np.exp(-2j * math.pi * bins * delay_samples / total)
    return np.fft.irfft(spectrum, n=total)


def render_plane_wave(
    source: PlaneWaveSource,
    geometry: ArrayGeometry,
    sample_rate: int,
    c: float = SPEED_OF_SOUND,
) -> np.ndarray:
    """Render a far-field source onto every mic: returns I x L samples."""
    if sample_rate < 1:
        raise SignalError(f"sample_rate must be >= 1, got {sample_rate}")
    if not (c > 0.0 and math.isfinite(c)):
        raise GeometryError(f"c must be positive, got {c!r}")
    u = direction_unit(source.theta, source.phi)
    delays = -(geometry.positions @ u) / c * sample_rate  # in samples
    pad = int(math.ceil(np.abs(delays).max())) + 1
    sig = source.signal * source.gain
    out = np.empty((geometry.num_mics, sig.size))
    for i, d in enumerate(delays):
        out[i] = fractional_delay(sig, float(d), pad)[: sig.size]
    return out


def plane_wave_amplitudes(
    theta: float,
    phi: float,
    freq_hz: float,
    geometry: ArrayGeometry,
    c: float = SPEED_OF_SOUND,
) -> np.ndarray:
    """Per-mic complex response of the delay model at one frequency.

    Equals e^{-i 2 pi f tau_i} = e^{i k (u . x_i)} with k = 2 pi f / c: the
    plane-wave spatial field sampled at the mic positions.
    """
    if not (freq_hz > 0.0 and math.isfinite(freq_hz)):
        raise SignalError(f"freq_hz must be positive, got {freq_hz!r}")
    if not (c > 0.0 and math.isfinite(c)):
        raise GeometryError(f"c must be positive, got {c!r}")
    u = direction_unit(theta, phi)
    return np.exp(2j * math.pi * freq_hz / c * (geometry.positions @ u))


def add_white_noise(
    wavs: np.ndarray, snr_db: float, rng: np.random.Generator | int | None = None
) -> np.ndarray:
    """Add white Gaussian noise at an exact total signal-to-noise power ratio.

    The noise draw is normalized to the measured target power, so the realized
    SNR equals ``snr_db`` up to float rounding.  Zero-energy input cannot be
    given an SNR and raises.
    """
    wavs = np.asarray(wavs, dtype=float)
    if not math.isfinite(snr_db):
        raise SignalError(f"snr_db must be finite, got {snr_db!r}")
    signal_power = float(np.mean(wavs**2))
    if signal_power <= 0.0:
        raise SignalError("cannot set an SNR for a zero-energy signal")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    noise = rng.standard_normal(wavs.shape)
    noise_power = float(np.mean(noise**2))
    target_power = signal_power / (10.0 ** (snr_db / 10.0))
    return wavs + noise * math.sqrt(target_power / noise_power)


def load_scene(path) -> dict:
    """Read and structurally validate a scene JSON file.

    Layout: {"geometry": path, "sample_rate": int, "sources": [{"direction_deg":
    [theta, phi], "wav": path, "gain": number}], "snr_db": optional number,
    "seed": optional int, "c": optional number}.  Relative paths resolve
    against the scene file's directory.
    """
    path = Path(path)
    try:
        scene = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"scene file {path}: invalid JSON ({exc})") from exc
    if not isinstance(scene, dict):
        raise FileFormatError(f"scene file {path}: expected a JSON object")
    for key in ("geometry", "sample_rate", "sources"):
        if key not in scene:
            raise FileFormatError(f"scene file {path}: missing required key {key!r}")
    if not isinstance(scene["sources"], list) or not scene["sources"]:
        raise FileFormatError(f"scene file {path}: 'sources' must be a non-empty list")
    for src in scene["sources"]:
        if not isinstance(src, dict) or "direction_deg" not in src or "wav" not in src:
            raise FileFormatError(
                f"scene file {path}: each source needs 'direction_deg' and 'wav'"
            )
        direction = src["direction_deg"]
        if not (isinstance(direction, list) and len(direction) == 2):
            raise FileFormatError(
                f"scene file {path}: 'direction_deg' must be [theta_deg, phi_deg]"
            )
    scene["_base_dir"] = path.parent
    return scene


def render_scene(scene: dict) -> tuple[np.ndarray, int]:
    """Render a loaded scene: sum of rendered sources, optional noise.

    Returns (I x L samples, sample_rate).  Source wavs must match the scene
    sample rate; shorter sources are zero-padded to the longest.
    """
    from .io import read_wav  # local import: io depends on errors only

    base = Path(scene.get("_base_dir", "."))
    geometry = load_geometry(_resolve(base, scene["geometry"]))
    sample_rate = int(scene["sample_rate"])
    c = float(scene.get("c", SPEED_OF_SOUND))
    rendered = []
    for src in scene["sources"]:
        rate, samples = read_wav(_resolve(base, src["wav"]))
        if rate != sample_rate:
            raise FileFormatError(
                f"source {src['wav']!r} has sample rate {rate}, scene wants {sample_rate}"
            )
        if samples.shape[0] != 1:
            raise FileFormatError(f"source {src['wav']!r} must be mono")
        theta, phi = (math.radians(float(v)) for v in src["direction_deg"])
        source = PlaneWaveSource(theta, phi, samples[0], gain=float(src.get("gain", 1.0)))
        rendered.append(render_plane_wave(source, geometry, sample_rate, c=c))
    length = max(r.shape[1] for r in rendered)
    out = np.zeros((geometry.num_mics, length))
    for r in rendered:
        out[:, : r.shape[1]] += r
    if "snr_db" in scene and scene["snr_db"] is not None:
        out = add_white_noise(out, float(scene["snr_db"]), rng=scene.get("seed"))
    return out, sample_rate


def _resolve(base: Path, p) -> Path:
    p = Path(p)
    return p if p.is_absolute() else base / p
