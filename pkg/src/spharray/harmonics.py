"""Spherical harmonics and the discrete sound-field encoding plan.

The harmonic basis used throughout is

    Y_n^m(theta, phi) = sqrt((2n+1)/(4*pi) * (n-m)!/(n+m)!) * P_n^m(cos theta) * e^{i m phi}

for m >= 0, where P_n^m is the associated Legendre function WITHOUT the
Condon-Shortley phase (P_1^1(x) = sqrt(1 - x^2), positive).  Negative orders
are defined through conjugate symmetry, Y_n^{-m} = (-1)^m conj(Y_n^m).  The
basis is orthonormal on the unit sphere; only per-harmonic phases differ from
the Condon-Shortley convention, so the addition theorem and plane-wave
expansion keep their usual forms.

Channels are ordered by c = n^2 + n + m (n = 0..N, m = -n..n), giving
C = (N+1)^2 channels for order N.

The discrete analysis of an I-mic array approximates the spherical integral
with per-mic weights that sum to 4*pi (uniformly 4*pi/I by default):

    p_nm = sum_i w_i * p(theta_i, phi_i) * conj(Y_n^m(theta_i, phi_i))

For real signals the conjugate symmetry p_{n,-m} = (-1)^m conj(p_{n,m}) makes
the complex coefficients redundant; the real packing stores Re(p_{n,m}) in
channel (n, +m) and Im(p_{n,m}) in channel (n, -m), keeping exactly (N+1)^2
real channels.  Because the weights are frequency-independent, the packed
matrix can be applied directly to time-domain sample blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NumericDomainError, ResolutionError, ShapeError
from .geometry import ArrayGeometry

FOUR_PI = 4.0 * math.pi


def num_channels(order: int) -> int:
    """Number of harmonic channels for a truncation order: (order + 1)^2."""
    if order < 0:
        raise NumericDomainError(f"order must be >= 0, got {order}")
    return (order + 1) ** 2


def sh_index(n: int, m: int) -> int:
    """Flat channel index of degree n, order m: n^2 + n + m."""
    if n < 0 or abs(m) > n:
        raise NumericDomainError(f"invalid degree/order ({n}, {m})")
    return n * n + n + m


def sh_degree_order(c: int) -> tuple[int, int]:
    """Inverse of sh_index: channel -> (n, m)."""
    if c < 0:
        raise NumericDomainError(f"channel index must be >= 0, got {c}")
    n = math.isqrt(c)
    return n, c - n * n - n


def assoc_legendre(n: int, m: int, x):
    """Associated Legendre P_n^m without the Condon-Shortley phase.

    Evaluated by the stable upward recurrence in degree from the diagonal seed
    P_m^m(x) = (2m-1)!! (1-x^2)^{m/2}.  Accepts scalars or arrays in [-1, 1].
    Zeros are exact at x = 0 for odd n + m (the recurrence only ever multiplies
    them by x or by earlier exact zeros).
    """
    if m < 0 or n < 0 or m > n:
        raise NumericDomainError(f"require 0 <= m <= n, got (n={n}, m={m})")
    arr = np.asarray(x, dtype=float)
    if np.any(np.abs(arr) > 1.0 + 1e-12):
        raise NumericDomainError("assoc_legendre argument outside [-1, 1]")
    arr = np.clip(arr, -1.0, 1.0)

    # Diagonal seed: (2m-1)!! * (1 - x^2)^{m/2}, built as a product of
    # odd-factor * sqrt(1-x^2) terms for numerical stability.
    sin_part = np.sqrt((1.0 - arr) * (1.0 + arr))
    p_prev = np.ones_like(arr)
    odd = 1.0
    for _ in range(m):
        p_prev = p_prev * odd * sin_part
        odd += 2.0
    if n == m:
        result = p_prev
    else:
        p_curr = arr * (2.0 * m + 1.0) * p_prev
        for k in range(m + 2, n + 1):
            p_next = (arr * (2.0 * k - 1.0) * p_curr - (k + m - 1.0) * p_prev) / (k - m)
            p_prev, p_curr = p_curr, p_next
        result = p_curr
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(result)
    return result


def _sh_normalization(n: int, m: int) -> float:
    """sqrt((2n+1)/(4*pi) * (n-m)!/(n+m)!) with the factorial ratio in log space."""
    return math.exp(
        0.5
        * (
            math.log(2.0 * n + 1.0)
            - math.log(FOUR_PI)
            + math.lgamma(n - m + 1.0)
            - math.lgamma(n + m + 1.0)
        )
    )


def _sh_from_cos(n: int, m: int, cos_theta, phi):
    """Y_n^m evaluated from cos(theta) and phi (arrays or scalars)."""
    if abs(m) > n or n < 0:
        raise NumericDomainError(f"invalid degree/order ({n}, {m})")
    ma = abs(m)
    p = assoc_legendre(n, ma, cos_theta)
    y = _sh_normalization(n, ma) * np.asarray(p) * np.exp(1j * ma * np.asarray(phi, dtype=float))
    if m < 0:
        y = np.conj(y)
        if ma % 2 == 1:
            y = -y
    return y


def sph_harmonic(n: int, m: int, theta, phi):
    """Spherical harmonic Y_n^m(theta, phi); scalar in, scalar out."""
    y = _sh_from_cos(n, m, np.cos(np.asarray(theta, dtype=float)), phi)
    if np.ndim(y) == 0:
        return complex(y)
    return y


def sh_matrix(order: int, cos_theta, phi) -> np.ndarray:
    """Stack all Y_n^m for n <= order into a C x P complex matrix."""
    cos_theta = np.atleast_1d(np.asarray(cos_theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    if cos_theta.shape != phi.shape:
        raise ShapeError("cos_theta and phi must have matching shapes")
    out = np.empty((num_channels(order), cos_theta.size), dtype=complex)
    for n in range(order + 1):
        for m in range(-n, n + 1):
            out[sh_index(n, m)] = _sh_from_cos(n, m, cos_theta, phi)
    return out


@dataclass(frozen=True)
class ShtPlan:
    """Discrete encoding of an array geometry at a fixed truncation order.

    ``weights`` is the C x I complex analysis matrix (mic weight times
    conj(Y)); ``real_weights`` is its lossless real packing for real signals;
    ``mic_weights`` are the per-mic quadrature weights (sum 4*pi).
    """

    geometry: ArrayGeometry
    order: int
    mic_weights: np.ndarray
    weights: np.ndarray = field(init=False)
    real_weights: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.order < 0:
            raise NumericDomainError(f"order must be >= 0, got {self.order}")
        mw = np.asarray(self.mic_weights, dtype=float)
        if mw.shape != (self.geometry.num_mics,):
            raise ShapeError(
                f"mic_weights shape {mw.shape} does not match {self.geometry.num_mics} mics"
            )
        cos_theta, phi = self.geometry.angles()
        basis = sh_matrix(self.order, cos_theta, phi)
        weights = mw[np.newaxis, :] * np.conj(basis)
        real = np.empty(weights.shape, dtype=float)
        for n in range(self.order + 1):
            real[sh_index(n, 0)] = weights[sh_index(n, 0)].real
            for m in range(1, n + 1):
                real[sh_index(n, m)] = weights[sh_index(n, m)].real
                real[sh_index(n, -m)] = weights[sh_index(n, m)].imag
        for arr in (mw, weights, real):
            arr.setflags(write=False)
        object.__setattr__(self, "mic_weights", mw)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "real_weights", real)

    @property
    def num_channels(self) -> int:
        return (self.order + 1) ** 2

    def apply_complex(self, values: np.ndarray) -> np.ndarray:
        """Complex analysis of per-mic values: (I,) or (I, L) -> (C,) or (C, L)."""
        values = np.asarray(values)
        if values.shape[0] != self.geometry.num_mics:
            raise ShapeError(
                f"expected {self.geometry.num_mics} channels, got {values.shape[0]}"
            )
        return self.weights @ values


def build_plan(
    geometry: ArrayGeometry, order: int, mic_weights: np.ndarray | None = None
) -> ShtPlan:
    """Build the discrete encoding plan for ``geometry`` at truncation ``order``.

    ``mic_weights`` defaults to the uniform 4*pi/I weighting used on physical
    arrays.  Explicit weights (summing to 4*pi) exist for virtual quadrature
    grids where a non-uniform rule makes the discrete analysis exact.
    """
    if mic_weights is None:
        mic_weights = np.full(geometry.num_mics, FOUR_PI / geometry.num_mics)
    return ShtPlan(geometry, order, np.asarray(mic_weights, dtype=float))


def gauss_legendre_grid(n_theta: int, n_phi: int):
    """Product quadrature grid on the sphere: Gauss-Legendre in cos(theta), uniform azimuth.

    Returns flat arrays (cos_theta, phi, weights) of length n_theta * n_phi
    with weights summing to 4*pi.  Exact for integrands whose polar part is a
    polynomial in cos(theta) of degree <= 2*n_theta - 1 and whose azimuthal
    orders are below n_phi in magnitude.
    """
    if n_theta < 1 or n_phi < 1:
        raise ResolutionError(f"grid sizes must be >= 1, got ({n_theta}, {n_phi})")
    nodes, gl_weights = np.polynomial.legendre.leggauss(n_theta)
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    cos_grid = np.repeat(nodes, n_phi)
    phi_grid = np.tile(phi, n_theta)
    w_grid = np.repeat(gl_weights, n_phi) * (2.0 * math.pi / n_phi)
    return cos_grid, phi_grid, w_grid


def gauss_legendre_geometry(
    n_theta: int, n_phi: int, radius: float
) -> tuple[ArrayGeometry, np.ndarray]:
    """Virtual mic array on a Gauss-Legendre sphere grid, with matching quadrature weights.

    Returns (geometry, mic_weights); feeding both to ``build_plan`` gives a
    discrete analysis that is exact for band-limited fields, which is the
    reference configuration for validating the uniform-weight analysis used on
    physical arrays.
    """
    cos_grid, phi_grid, w_grid = gauss_legendre_grid(n_theta, n_phi)
    sin_grid = np.sqrt(np.clip(1.0 - cos_grid * cos_grid, 0.0, None))
    pos = radius * np.stack(
        [sin_grid * np.cos(phi_grid), sin_grid * np.sin(phi_grid), cos_grid], axis=1
    )
    return ArrayGeometry(f"gauss_legendre_{n_theta}x{n_phi}", pos), w_grid


def quadrature_sht(
    field_fn: Callable,
    order: int,
    n_theta: int | None = None,
    n_phi: int | None = None,
) -> np.ndarray:
    """Continuous-analysis oracle: project a field on the sphere onto Y_n^m by quadrature.

    ``field_fn(theta, phi)`` must accept equal-shaped angle arrays and return
    the (possibly complex) field values.  Defaults (2*order + 2 polar nodes,
    4*order + 4 azimuths) are exact for fields band-limited to ``order``; pass
    larger grids for higher-order fields.  Grids below the order's Nyquist
    requirement (order + 1 polar, 2*order + 1 azimuth) are rejected.
    """
    if order < 0:
        raise NumericDomainError(f"order must be >= 0, got {order}")
    if n_theta is None:
        n_theta = 2 * order + 2
    if n_phi is None:
        n_phi = 4 * order + 4
    if n_theta < order + 1 or n_phi < 2 * order + 1:
        raise ResolutionError(
            f"grid ({n_theta}, {n_phi}) below the Nyquist requirement "
            f"({order + 1}, {2 * order + 1}) for order {order}"
        )
    cos_grid, phi_grid, w_grid = gauss_legendre_grid(n_theta, n_phi)
    values = np.asarray(field_fn(np.arccos(cos_grid), phi_grid))
    if values.shape != cos_grid.shape:
        raise ShapeError("field_fn must return one value per grid point")
    basis = sh_matrix(order, cos_grid, phi_grid)
    return np.conj(basis) @ (w_grid * values)
