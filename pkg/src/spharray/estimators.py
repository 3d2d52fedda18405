"""sklearn-style estimator wrappers around the functional core.

Both transformers follow the scikit-learn contract: constructor arguments are
stored verbatim, ``fit`` derives state into trailing-underscore attributes and
returns ``self``, ``get_params``/``set_params``/``clone`` work, and the two
compose in a ``sklearn.pipeline.Pipeline`` (waveforms -> magnitude tensor ->
enhanced spectrum).  X is one utterance: an (I, L) waveform block for the
encoder, a (C, T, F) tensor for the enhancer.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .errors import GeometryError
from .frontend import sht_transform
from .geometry import ArrayGeometry, load_geometry
from .harmonics import build_plan
from .ssafn import SsafnConfig, init_weights, load_weights, ssafn_forward
from .stft import StftConfig, stft
from .validation import check_waveforms


class SphericalHarmonicEncoder(BaseEstimator, TransformerMixin):
    """Waveforms -> harmonic-domain magnitude tensor.

    Parameters
    ----------
    geometry : ArrayGeometry or path to a geometry JSON file.
    order : harmonic truncation order; output has (order + 1)^2 channels.
    sample_rate, fft_size, frame_len, hop, window : framing parameters.
    """

    def __init__(
        self,
        geometry=None,
        order=4,
        sample_rate=16000,
        fft_size=512,
        frame_len=400,
        hop=160,
        window="hann",
    ):
        self.geometry = geometry
        self.order = order
        self.sample_rate = sample_rate
        self.fft_size = fft_size
        self.frame_len = frame_len
        self.hop = hop
        self.window = window

    def fit(self, X=None, y=None):
        """Resolve the geometry and build the encoding plan."""
        if self.geometry is None:
            raise GeometryError("geometry is required (ArrayGeometry or JSON path)")
        if isinstance(self.geometry, ArrayGeometry):
            geometry = self.geometry
        else:
            geometry = load_geometry(self.geometry)
        self.geometry_ = geometry
        self.plan_ = build_plan(geometry, self.order)
        self.stft_config_ = StftConfig(
            sample_rate=self.sample_rate,
            fft_size=self.fft_size,
            frame_len=self.frame_len,
            hop=self.hop,
            window=self.window,
        )
        return self

    def transform(self, X):
        """(I, L) waveforms -> (C, T, F) magnitude tensor."""
        check_is_fitted(self, "plan_")
        wavs = check_waveforms(X, num_channels=self.geometry_.num_mics)
        return np.abs(stft(sht_transform(wavs, self.plan_), self.stft_config_))


class SsafnEnhancer(BaseEstimator, TransformerMixin):
    """Magnitude tensor -> enhanced T x F spectrum.

    With ``weights_path`` set, ``fit`` loads that weight file (its embedded
    config wins); otherwise it initializes seeded weights from the dimension
    parameters.
    """

    def __init__(
        self,
        channels=25,
        freq_bins=257,
        embed_dim=64,
        num_heads=2,
        attn_dim=64,
        cbam_kernels=(9, 7, 5, 3),
        reduction=5,
        joint_attention=True,
        rsacc=True,
        mhsa=True,
        seed=0,
        weights_path=None,
    ):
        self.channels = channels
        self.freq_bins = freq_bins
        self.embed_dim = embed_dim
        self.num_heads = num_heads
        self.attn_dim = attn_dim
        self.cbam_kernels = cbam_kernels
        self.reduction = reduction
        self.joint_attention = joint_attention
        self.rsacc = rsacc
        self.mhsa = mhsa
        self.seed = seed
        self.weights_path = weights_path

    def fit(self, X=None, y=None):
        """Load or initialize the network weights."""
        if self.weights_path is not None:
            self.weights_ = load_weights(self.weights_path)
        else:
            config = SsafnConfig(
                channels=self.channels,
                freq_bins=self.freq_bins,
                embed_dim=self.embed_dim,
                num_heads=self.num_heads,
                attn_dim=self.attn_dim,
                cbam_kernels=tuple(self.cbam_kernels),
                reduction=self.reduction,
                joint_attention=self.joint_attention,
                rsacc=self.rsacc,
                mhsa=self.mhsa,
            )
            self.weights_ = init_weights(config, seed=self.seed)
        self.config_ = self.weights_.config
        return self

    def transform(self, X):
        """(C, T, F) magnitude tensor -> (T, F) spectrum."""
        check_is_fitted(self, "weights_")
        return ssafn_forward(X, self.weights_)
