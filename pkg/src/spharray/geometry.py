"""Microphone-array geometries.

Positions are kept in Cartesian metres as the ground truth (an I x 3 array)
with per-mic spherical coordinates derived from them.  Keeping Cartesian as
primary matters for planar arrays: a mic constructed in the z = 0 plane has
cos(theta) == 0.0 exactly, which downstream harmonic evaluation relies on,
whereas cos(pi/2) evaluated in float64 is only ~6e-17.

Conventions: theta is the polar angle in [0, pi] measured from +z, phi the
azimuth in [0, 2*pi) measured from +x toward +y.  The origin (r = 0) maps to
(0, 0, 0) in spherical form.  All arrays are centroid-referenced: the Cartesian
mean of the mic positions is the zero vector (to within 1e-9 m).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import FileFormatError, GeometryError, SubsetError

TWO_PI = 2.0 * math.pi

# Slack for clamping theta onto [0, pi] before rejecting it.
_THETA_TOL = 1e-12


def _wrap_phi(phi: float) -> float:
    """Wrap an azimuth onto [0, 2*pi)."""
    phi = float(phi) % TWO_PI
    # The modulo can round up to exactly 2*pi for tiny negative inputs.
    if phi >= TWO_PI:
        phi -= TWO_PI
    return phi


@dataclass(frozen=True)
class SphericalCoord:
    """One point in spherical coordinates (radius metres, theta, phi radians)."""

    r: float
    theta: float
    phi: float

    def __post_init__(self):
        r = float(self.r)
        if not (math.isfinite(r) and r >= 0.0):
            raise GeometryError(f"radius must be finite and non-negative, got {self.r!r}")
        theta = float(self.theta)
        if not math.isfinite(theta):
            raise GeometryError(f"theta must be finite, got {self.theta!r}")
        if theta < 0.0:
            if theta < -_THETA_TOL:
                raise GeometryError(f"theta outside [0, pi]: {theta!r}")
            theta = 0.0
        elif theta > math.pi:
            if theta > math.pi + _THETA_TOL:
                raise GeometryError(f"theta outside [0, pi]: {theta!r}")
            theta = math.pi
        phi = float(self.phi)
        if not math.isfinite(phi):
            raise GeometryError(f"phi must be finite, got {self.phi!r}")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", _wrap_phi(phi))


def spherical_to_cartesian(coord: SphericalCoord) -> np.ndarray:
    """Map a SphericalCoord to a Cartesian (x, y, z) vector in metres."""
    sin_t = math.sin(coord.theta)
    return np.array(
        [
            coord.r * sin_t * math.cos(coord.phi),
            coord.r * sin_t * math.sin(coord.phi),
            coord.r * math.cos(coord.theta),
        ]
    )


def cartesian_to_spherical(position) -> SphericalCoord:
    """Map a Cartesian (x, y, z) vector to spherical form; the origin maps to (0, 0, 0)."""
    x, y, z = (float(v) for v in position)
    if not all(math.isfinite(v) for v in (x, y, z)):
        raise GeometryError(f"position must be finite, got {position!r}")
    r = math.sqrt(x * x + y * y + z * z)
    if r == 0.0:
        return SphericalCoord(0.0, 0.0, 0.0)
    cos_t = min(1.0, max(-1.0, z / r))
    theta = math.acos(cos_t)
    phi = _wrap_phi(math.atan2(y, x))
    return SphericalCoord(r, theta, phi)


@dataclass(frozen=True)
class ArrayGeometry:
    """An immutable, centroid-referenced microphone array.

    ``positions`` is the I x 3 Cartesian ground truth; ``mics`` holds the
    derived per-mic spherical coordinates in the same channel order.
    """

    name: str
    positions: np.ndarray
    mics: tuple[SphericalCoord, ...] = field(init=False)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 1:
            raise GeometryError(f"positions must be an I x 3 array, got shape {pos.shape}")
        if not np.all(np.isfinite(pos)):
            raise GeometryError("positions must be finite")
        pos = pos - pos.mean(axis=0)
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(
            self, "mics", tuple(cartesian_to_spherical(p) for p in pos)
        )

    @property
    def num_mics(self) -> int:
        return self.positions.shape[0]

    @property
    def radii(self) -> np.ndarray:
        return np.linalg.norm(self.positions, axis=1)

    @property
    def max_radius(self) -> float:
        return float(self.radii.max())

    def angles(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-mic (cos(theta), phi) arrays, computed from Cartesian positions.

        cos(theta) comes from z / r so planar arrays yield exact zeros; mics at
        the origin use the (0, 0, 0) convention (cos(theta) = 1, phi = 0).
        """
        r = self.radii
        cos_theta = np.ones(self.num_mics)
        phi = np.zeros(self.num_mics)
        nonzero = r > 0.0
        z = self.positions[:, 2]
        cos_theta[nonzero] = np.clip(z[nonzero] / r[nonzero], -1.0, 1.0)
        phi[nonzero] = np.mod(
            np.arctan2(self.positions[nonzero, 1], self.positions[nonzero, 0]), TWO_PI
        )
        phi[phi >= TWO_PI] -= TWO_PI
        return cos_theta, phi


def custom_array(points, name: str = "custom") -> ArrayGeometry:
    """Build a centroid-referenced array from arbitrary Cartesian points (metres)."""
    return ArrayGeometry(name, np.asarray(points, dtype=float))


def uniform_circular_array(count: int, radius: float) -> ArrayGeometry:
    """``count`` mics evenly spaced on a circle of ``radius`` metres in the z = 0 plane."""
    if count < 1:
        raise GeometryError(f"count must be >= 1, got {count}")
    if not (radius > 0.0 and math.isfinite(radius)):
        raise GeometryError(f"radius must be positive, got {radius!r}")
    phi = TWO_PI * np.arange(count) / count
    pos = np.stack([radius * np.cos(phi), radius * np.sin(phi), np.zeros(count)], axis=1)
    return ArrayGeometry(f"uniform_circular_{count}", pos)


def square_array(side_len: float) -> ArrayGeometry:
    """Four mics at the corners of a square of side ``side_len`` in the z = 0 plane."""
    if not (side_len > 0.0 and math.isfinite(side_len)):
        raise GeometryError(f"side_len must be positive, got {side_len!r}")
    h = side_len / 2.0
    pos = np.array([[h, h, 0.0], [-h, h, 0.0], [-h, -h, 0.0], [h, -h, 0.0]])
    return ArrayGeometry("square", pos)


def binaural_array(spacing: float) -> ArrayGeometry:
    """Two mics on the y-axis at +/- spacing/2."""
    if not (spacing > 0.0 and math.isfinite(spacing)):
        raise GeometryError(f"spacing must be positive, got {spacing!r}")
    h = spacing / 2.0
    return ArrayGeometry("binaural", np.array([[0.0, h, 0.0], [0.0, -h, 0.0]]))


_BUILTINS = {
    "uniform_circular": uniform_circular_array,
    "square": square_array,
    "binaural": binaural_array,
    "custom": custom_array,
}


def builtin_geometry(kind: str, *args, **kwargs) -> ArrayGeometry:
    """Dispatch to a named builtin constructor (uniform_circular, square, binaural, custom)."""
    try:
        ctor = _BUILTINS[kind]
    except KeyError:
        raise GeometryError(
            f"unknown geometry kind {kind!r}; expected one of {sorted(_BUILTINS)}"
        ) from None
    return ctor(*args, **kwargs)


def subset_geometry(geometry: ArrayGeometry, indices: Sequence[int]) -> ArrayGeometry:
    """Re-reference a channel subset of ``geometry`` to the subset centroid.

    ``indices`` must be distinct, in range, and select at least two mics; the
    given order becomes the new channel order.  The transform is a rigid
    translation, so pairwise mic distances are preserved.
    """
    idx = list(indices)
    if len(idx) < 2:
        raise SubsetError(f"subset must keep at least 2 mics, got {len(idx)}")
    if any((not isinstance(i, (int, np.integer))) for i in idx):
        raise SubsetError(f"subset indices must be integers, got {indices!r}")
    if len(set(int(i) for i in idx)) != len(idx):
        raise SubsetError(f"subset indices must be distinct, got {indices!r}")
    if any(i < 0 or i >= geometry.num_mics for i in idx):
        raise SubsetError(
            f"subset indices out of range [0, {geometry.num_mics}): {indices!r}"
        )
    if idx == list(range(geometry.num_mics)):
        # Keeping every mic in order is the identity: hand back the original
        # geometry so the "subset of everything" path is exactly the full path
        # (re-centering an already centered array would perturb the last bits).
        return geometry
    return ArrayGeometry(f"{geometry.name}/subset", geometry.positions[idx])


def far_field_min_distance(geometry: ArrayGeometry, f_max: float, c: float = 343.0) -> float:
    """Smallest source distance (m) where the plane-wave assumption holds: 8 r^2 f / c."""
    if not (f_max > 0.0 and math.isfinite(f_max)):
        raise GeometryError(f"f_max must be positive, got {f_max!r}")
    if not (c > 0.0 and math.isfinite(c)):
        raise GeometryError(f"c must be positive, got {c!r}")
    r = geometry.max_radius
    return 8.0 * r * r * f_max / c


def load_geometry(path) -> ArrayGeometry:
    """Read a geometry JSON file: {"name": str, "unit": "m", "mics": [[x, y, z], ...]}."""
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"geometry file {path}: invalid JSON ({exc})") from exc
    if not isinstance(payload, dict):
        raise FileFormatError(f"geometry file {path}: expected a JSON object")
    unit = payload.get("unit")
    if unit != "m":
        raise FileFormatError(f"geometry file {path}: unit must be 'm', got {unit!r}")
    mics = payload.get("mics")
    if not isinstance(mics, list) or not mics:
        raise FileFormatError(f"geometry file {path}: 'mics' must be a non-empty list")
    for row in mics:
        if not (isinstance(row, list) and len(row) == 3):
            raise FileFormatError(
                f"geometry file {path}: every mic must be an [x, y, z] triple"
            )
        if not all(isinstance(v, (int, float)) and math.isfinite(v) for v in row):
            raise FileFormatError(f"geometry file {path}: mic coordinates must be finite numbers")
    name = payload.get("name", Path(path).stem)
    if not isinstance(name, str):
        raise FileFormatError(f"geometry file {path}: 'name' must be a string")
    try:
        return custom_array(mics, name=name)
    except GeometryError as exc:
        raise FileFormatError(f"geometry file {path}: {exc}") from exc


def save_geometry(geometry: ArrayGeometry, path) -> None:
    """Write a geometry JSON file in the format ``load_geometry`` reads."""
    payload = {
        "name": geometry.name,
        "unit": "m",
        "mics": [[float(v) for v in row] for row in geometry.positions],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")
