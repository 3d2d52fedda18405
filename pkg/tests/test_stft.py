"""Short-time Fourier analysis: framing, windowing, spectra."""

import cmath
import math

import numpy as np
import pytest

from spharray import NumericDomainError, ShapeError, SignalError, StftConfig, magnitude, stft
from spharray.stft import frame_signal


def naive_frame_dft(signal, config, frame_index):
    """Scalar-loop windowed DFT of one frame: the independent route."""
    window = config.window_array()
    start = frame_index * config.hop
    bins = config.fft_size // 2 + 1
    out = []
    for k in range(bins):
        acc = 0.0 + 0.0j
        for n in range(config.frame_len):
            angle = -2.0 * math.pi * k * n / config.fft_size
            acc += window[n] * signal[start + n] * cmath.exp(1j * angle)
        out.append(acc)
    return np.array(out)


class TestStftConfig:
    def test_defaults(self):
        cfg = StftConfig()
        assert (cfg.sample_rate, cfg.fft_size, cfg.frame_len, cfg.hop) == (
            16000,
            512,
            400,
            160,
        )
        assert cfg.num_bins == 257

    def test_frame_count_examples(self):
        cfg = StftConfig()
        assert cfg.num_frames(160000) == 998
        assert cfg.num_frames(16000) == 98
        assert cfg.num_frames(400) == 1
        assert cfg.num_frames(559) == 1
        assert cfg.num_frames(560) == 2

    def test_frame_count_matches_naive_walk(self):
        cfg = StftConfig()
        rng = np.random.default_rng(2)
        for _ in range(50):
            length = int(rng.integers(cfg.frame_len, 20000))
            count, start = 0, 0
            while start + cfg.frame_len <= length:
                count += 1
                start += cfg.hop
            assert cfg.num_frames(length) == count

    def test_too_short_raises(self):
        with pytest.raises(SignalError):
            StftConfig().num_frames(399)

    def test_validation(self):
        with pytest.raises(NumericDomainError):
            StftConfig(frame_len=600)  # exceeds fft_size
        with pytest.raises(NumericDomainError):
            StftConfig(hop=0)
        with pytest.raises(NumericDomainError):
            StftConfig(hop=500)  # exceeds frame_len
        with pytest.raises(NumericDomainError):
            StftConfig(window="hamming")
        with pytest.raises(NumericDomainError):
            StftConfig(sample_rate=0)

    def test_periodic_hann_window(self):
        w = StftConfig().window_array()
        assert w[0] == 0.0
        assert w[200] == pytest.approx(1.0)
        # periodic symmetry: w[i] == w[frame_len - i]
        np.testing.assert_allclose(w[1:], w[:0:-1], atol=1e-15)
        assert w.sum() == pytest.approx(200.0)  # half the frame length

    def test_rect_window(self):
        w = StftConfig(window="rect").window_array()
        np.testing.assert_array_equal(w, np.ones(400))


class TestFraming:
    def test_frames_are_hop_shifted_slices(self):
        cfg = StftConfig(frame_len=8, hop=3, fft_size=8)
        signal = np.arange(20.0)
        frames = frame_signal(signal, cfg)
        assert frames.shape == (5, 8)
        for t in range(5):
            np.testing.assert_array_equal(frames[t], signal[3 * t : 3 * t + 8])

    def test_multichannel_framing(self):
        cfg = StftConfig(frame_len=8, hop=4, fft_size=8)
        signal = np.arange(40.0).reshape(2, 20)
        frames = frame_signal(signal, cfg)
        assert frames.shape == (2, 4, 8)
        np.testing.assert_array_equal(frames[1, 2], signal[1, 8:16])


class TestStft:
    def test_output_shapes(self):
        cfg = StftConfig()
        rng = np.random.default_rng(3)
        assert stft(rng.normal(size=160000), cfg).shape == (998, 257)
        assert stft(rng.normal(size=(8, 16000)), cfg).shape == (8, 98, 257)

    def test_rejects_3d(self):
        with pytest.raises(ShapeError):
            stft(np.zeros((2, 2, 500)), StftConfig())

    def test_matches_naive_dft(self):
        cfg = StftConfig(fft_size=32, frame_len=24, hop=8)
        rng = np.random.default_rng(5)
        signal = rng.normal(size=100)
        spectra = stft(signal, cfg)
        for t in (0, 3, spectra.shape[0] - 1):
            np.testing.assert_allclose(
                spectra[t], naive_frame_dft(signal, cfg, t), atol=1e-12
            )

    def test_constant_signal_dc(self):
        cfg = StftConfig()
        spectra = stft(np.ones(4000), cfg)
        wsum = cfg.window_array().sum()
        np.testing.assert_allclose(spectra[:, 0].real, wsum, rtol=1e-12)
        np.testing.assert_allclose(spectra[:, 0].imag, 0.0, atol=1e-9)

    def test_constant_signal_unpadded_sidelobes(self):
        # with frame_len == fft_size the periodic window's spectrum is exactly
        # two-sided: only bins 0 and 1 are nonzero for a constant input
        cfg = StftConfig(fft_size=512, frame_len=512, hop=256)
        spectra = stft(np.ones(2048), cfg)
        mags = np.abs(spectra)
        assert np.allclose(mags[:, 0], 256.0, rtol=1e-12)
        assert np.allclose(mags[:, 1], 128.0, rtol=1e-9)
        assert mags[:, 2:].max() < 1e-9

    def test_bin_centered_tone(self):
        # analytic spectrum of a bin-centered cosine under the periodic window:
        # |X[k0]| = N/4, |X[k0 +/- 1]| = N/8, all other bins exactly zero
        cfg = StftConfig(fft_size=512, frame_len=512, hop=512)
        k0 = 32
        n = np.arange(4096)
        phase0 = 0.7
        signal = np.cos(2 * math.pi * k0 * n / 512 + phase0)
        spectra = stft(signal, cfg)
        mags = np.abs(spectra)
        np.testing.assert_allclose(mags[:, k0], 128.0, rtol=1e-10)
        np.testing.assert_allclose(mags[:, k0 - 1], 64.0, rtol=1e-9)
        np.testing.assert_allclose(mags[:, k0 + 1], 64.0, rtol=1e-9)
        other = np.delete(mags, [k0 - 1, k0, k0 + 1], axis=1)
        assert other.max() < 1e-8
        # the peak bin's phase tracks the tone's initial phase per frame
        for t in range(spectra.shape[0]):
            expected = cmath.exp(1j * (phase0 + 2 * math.pi * k0 * (t * 512) / 512))
            got = spectra[t, k0] / 128.0
            assert got == pytest.approx(expected, abs=1e-10)

    def test_linearity(self):
        cfg = StftConfig()
        rng = np.random.default_rng(7)
        x = rng.normal(size=5000)
        y = rng.normal(size=5000)
        mixed = stft(2.5 * x - 0.7 * y, cfg)
        separate = 2.5 * stft(x, cfg) - 0.7 * stft(y, cfg)
        np.testing.assert_allclose(mixed, separate, atol=1e-9)

    def test_parseval_per_frame(self):
        cfg = StftConfig()
        rng = np.random.default_rng(11)
        signal = rng.normal(size=2000)
        spectra = stft(signal, cfg)
        frames = frame_signal(signal, cfg) * cfg.window_array()
        for t in range(spectra.shape[0]):
            mags2 = np.abs(spectra[t]) ** 2
            # real-FFT accounting: double every bin except DC and Nyquist
            spectral = mags2[0] + 2 * mags2[1:-1].sum() + mags2[-1]
            time_domain = cfg.fft_size * (frames[t] ** 2).sum()
            assert spectral == pytest.approx(time_domain, rel=1e-12)

    def test_zero_preservation(self):
        spectra = stft(np.zeros(1000), StftConfig())
        assert np.all(spectra == 0.0)

    def test_magnitude(self):
        rng = np.random.default_rng(13)
        z = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
        got = magnitude(z)
        for i in range(3):
            for j in range(4):
                want = math.sqrt(z[i, j].real ** 2 + z[i, j].imag ** 2)
                assert got[i, j] == pytest.approx(want, rel=1e-15)
