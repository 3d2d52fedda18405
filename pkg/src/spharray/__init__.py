"""spharray: geometry-agnostic spherical-harmonic frontend for microphone arrays.

Multichannel audio is encoded into a fixed number of harmonic-domain channels
(independent of the microphone count or layout), analyzed into a magnitude
tensor, and enhanced by a deterministic attention network.  Companion modules
simulate far-field plane waves onto arrays and account parameters/FLOPs
analytically.
"""

from .errors import (
    FileFormatError,
    GeometryError,
    NumericDomainError,
    ResolutionError,
    ShapeError,
    SignalError,
    SpharrayError,
    SubsetError,
    WeightFormatError,
)
from .estimators import SphericalHarmonicEncoder, SsafnEnhancer
from .frontend import (
    ChunkConfig,
    ChunkSpan,
    RandShtPolicy,
    draw_subset_indices,
    encode_frontend,
    rand_sht_select,
    sht_transform,
    split_chunks,
)
from .geometry import (
    ArrayGeometry,
    SphericalCoord,
    binaural_array,
    builtin_geometry,
    cartesian_to_spherical,
    custom_array,
    far_field_min_distance,
    load_geometry,
    save_geometry,
    spherical_to_cartesian,
    square_array,
    subset_geometry,
    uniform_circular_array,
)
from .harmonics import (
    ShtPlan,
    assoc_legendre,
    build_plan,
    gauss_legendre_geometry,
    gauss_legendre_grid,
    num_channels,
    quadrature_sht,
    sh_degree_order,
    sh_index,
    sh_matrix,
    sph_harmonic,
)
from .io import read_tensor, read_wav, write_tensor, write_wav
from .profiling import (
    CostModel,
    LayerCost,
    blstm_cost_model,
    blstm_param_count,
    cost_curve,
    flop_reduction,
    flops_blstm_baseline,
    flops_shtnet,
    shtnet_cost_model,
    ssafn_layer_costs,
    write_cost_csv,
)
from .simulate import (
    PlaneWaveSource,
    add_white_noise,
    direction_unit,
    fractional_delay,
    load_scene,
    plane_wave_amplitudes,
    render_plane_wave,
    render_scene,
)
from .ssafn import (
    SsafnConfig,
    SsafnWeights,
    cbam_forward,
    channel_mean_reduce,
    coor_attention_forward,
    init_weights,
    joint_attention_block,
    load_weights,
    mhsa_postfilter,
    param_count,
    rsacc_forward,
    save_weights,
    ssafn_forward,
    tensor_specs,
)
from .stft import StftConfig, magnitude, stft

__version__ = "0.1.0"
