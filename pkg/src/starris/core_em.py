"""Physical constants, geometry primitives and the scalar free-space Green's function.

Everything here is a pure function of its inputs.  Coordinates are in metres,
frequencies in hertz and phases in radians.  The RIS convention used across
the package puts the surface in the x-y plane with its thickness along z, the
transmission side at z > 0 and the reflection side at z < 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import DegenerateFrame, InvalidParameter, SingularPoint

SPEED_OF_LIGHT = 299_792_458.0
MU_0 = 1.256_637_062_12e-6
EPSILON_0 = 1.0 / (MU_0 * SPEED_OF_LIGHT**2)

__all__ = [
    "SPEED_OF_LIGHT",
    "MU_0",
    "EPSILON_0",
    "SignalParams",
    "Point3",
    "BoxVolume",
    "green_yy",
    "green_matrix",
    "focusing_phase",
    "frame_axes",
    "local_frame",
    "to_local",
    "linear_to_db",
    "db_to_linear",
]


class Point3(NamedTuple):
    x: float
    y: float
    z: float

    def __sub__(self, other):  # type: ignore[override]
        return Point3(self.x - other[0], self.y - other[1], self.z - other[2])

    def __add__(self, other):  # type: ignore[override]
        return Point3(self.x + other[0], self.y + other[1], self.z + other[2])

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    @classmethod
    def of(cls, p) -> "Point3":
        x, y, z = (float(v) for v in p)
        if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(z)):
            raise InvalidParameter(f"non-finite point {p!r}")
        return cls(x, y, z)


@dataclass(frozen=True)
class SignalParams:
    """Carrier description plus the Green's-function coupling prefactor.

    Use :meth:`from_frequency` or :meth:`from_wavelength` rather than the raw
    constructor; they keep ``wavelength_m * frequency_hz == c``.

    ``beta`` multiplies every Green's function.  The default is the standard
    radiation prefactor ``-j * omega * mu_0``; any gain computed by the package
    carries ``|beta|**2`` as a common factor, so changing it rescales absolute
    levels but never reorders results.
    """

    frequency_hz: float
    wavelength_m: float
    wavenumber: float
    angular_freq: float
    beta: complex

    def __post_init__(self):
        if not (self.frequency_hz > 0 and math.isfinite(self.frequency_hz)):
            raise InvalidParameter(f"frequency must be positive, got {self.frequency_hz}")
        if not (self.wavelength_m > 0 and math.isfinite(self.wavelength_m)):
            raise InvalidParameter(f"wavelength must be positive, got {self.wavelength_m}")
        if abs(self.wavelength_m * self.frequency_hz - SPEED_OF_LIGHT) > 1e-9 * SPEED_OF_LIGHT:
            raise InvalidParameter("wavelength * frequency must equal the speed of light")
        if abs(self.beta) == 0:
            raise InvalidParameter("beta must be non-zero")

    @classmethod
    def from_frequency(cls, frequency_hz: float, beta: Optional[complex] = None,
                       beta_magnitude: Optional[float] = None) -> "SignalParams":
        if not frequency_hz > 0:
            raise InvalidParameter(f"frequency must be positive, got {frequency_hz}")
        wavelength = SPEED_OF_LIGHT / frequency_hz
        return cls._build(frequency_hz, wavelength, beta, beta_magnitude)

    @classmethod
    def from_wavelength(cls, wavelength_m: float, beta: Optional[complex] = None,
                        beta_magnitude: Optional[float] = None) -> "SignalParams":
        if not wavelength_m > 0:
            raise InvalidParameter(f"wavelength must be positive, got {wavelength_m}")
        frequency = SPEED_OF_LIGHT / wavelength_m
        return cls._build(frequency, wavelength_m, beta, beta_magnitude)

    @classmethod
    def _build(cls, frequency, wavelength, beta, beta_magnitude):
        omega = 2.0 * math.pi * frequency
        if beta is None:
            beta = -1j * omega * MU_0
        beta = complex(beta)
        if beta_magnitude is not None:
            if not beta_magnitude > 0:
                raise InvalidParameter("beta magnitude must be positive")
            beta = beta / abs(beta) * beta_magnitude
        return cls(
            frequency_hz=float(frequency),
            wavelength_m=float(wavelength),
            wavenumber=2.0 * math.pi / wavelength,
            angular_freq=omega,
            beta=beta,
        )

    @property
    def beta_sq(self) -> float:
        """``|beta|**2``, the factor every channel gain carries."""
        return abs(self.beta) ** 2


@dataclass(frozen=True)
class BoxVolume:
    """Axis-aligned box given by its centre and full extents."""

    center: Point3
    extent_x: float
    extent_y: float
    extent_z: float

    def __post_init__(self):
        object.__setattr__(self, "center", Point3.of(self.center))
        for name in ("extent_x", "extent_y", "extent_z"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidParameter(f"{name} must be positive and finite, got {v}")

    @classmethod
    def centered(cls, extents, center=(0.0, 0.0, 0.0)) -> "BoxVolume":
        ex, ey, ez = extents
        return cls(Point3.of(center), float(ex), float(ey), float(ez))

    @property
    def extents(self) -> tuple:
        return (self.extent_x, self.extent_y, self.extent_z)

    def volume(self) -> float:
        return self.extent_x * self.extent_y * self.extent_z

    @property
    def face_area(self) -> float:
        """Area of the x-y face (the aperture seen along z)."""
        return self.extent_x * self.extent_y

    @property
    def max_extent(self) -> float:
        return max(self.extents)

    def contains(self, p, tol: float = 0.0) -> bool:
        c = self.center
        return (abs(p[0] - c.x) <= self.extent_x / 2 + tol
                and abs(p[1] - c.y) <= self.extent_y / 2 + tol
                and abs(p[2] - c.z) <= self.extent_z / 2 + tol)

    def overlaps(self, other: "BoxVolume") -> bool:
        a, b = self.center, other.center
        return (abs(a.x - b.x) < (self.extent_x + other.extent_x) / 2
                and abs(a.y - b.y) < (self.extent_y + other.extent_y) / 2
                and abs(a.z - b.z) < (self.extent_z + other.extent_z) / 2)

    def moved(self, center) -> "BoxVolume":
        return BoxVolume(Point3.of(center), self.extent_x, self.extent_y, self.extent_z)


def green_yy(params: SignalParams, field_pt, source_pt) -> complex:
    """Scalar (y, y) free-space Green's function ``-beta exp(-jkd) / (4 pi d)``."""
    d = math.dist(tuple(field_pt), tuple(source_pt))
    if d == 0.0:
        raise SingularPoint("field and source points coincide")
    k = params.wavenumber
    return complex(-params.beta * np.exp(-1j * k * d) / (4.0 * math.pi * d))


def green_matrix(params: SignalParams, field_pts, source_pts) -> np.ndarray:
    """Vectorised :func:`green_yy`; returns an array of shape (n_field, n_source)."""
    f = np.atleast_2d(np.asarray(field_pts, dtype=float))
    s = np.atleast_2d(np.asarray(source_pts, dtype=float))
    diff = f[:, None, :] - s[None, :, :]
    d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    if np.any(d == 0.0):
        raise SingularPoint("field and source points coincide")
    return -params.beta * np.exp(-1j * params.wavenumber * d) / (4.0 * np.pi * d)


def focusing_phase(params: SignalParams, local_source, focal_distance: float):
    """Unit-modulus focusing function ``exp(-jk[z - (x^2 + y^2) / (2 r)])``.

    ``local_source`` is expressed in the frame returned by :func:`frame_axes`
    (origin at the tile centre, +z towards the focal point).  Accepts a single
    point or an array of shape (..., 3); returns a complex scalar or array.
    """
    if not focal_distance > 0:
        raise InvalidParameter(f"focal distance must be positive, got {focal_distance}")
    p = np.asarray(local_source, dtype=float)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    phase = -params.wavenumber * (z - (x * x + y * y) / (2.0 * focal_distance))
    out = np.exp(1j * phase)
    return complex(out) if out.ndim == 0 else out


def frame_axes(center, target) -> np.ndarray:
    """Rows are the local x, y, z unit vectors of a frame at ``center`` looking at ``target``.

    x is taken perpendicular to the global y axis; when the look direction is
    parallel to global y, global x is used instead.
    """
    c = np.asarray(center, dtype=float)
    t = np.asarray(target, dtype=float)
    v = t - c
    n = np.linalg.norm(v)
    if n == 0.0:
        raise DegenerateFrame("frame centre coincides with target")
    z = v / n
    x = np.cross(np.array([0.0, 1.0, 0.0]), z)
    nx = np.linalg.norm(x)
    if nx < 1e-12:
        x = np.array([1.0, 0.0, 0.0])
    else:
        x = x / nx
    y = np.cross(z, x)
    return np.stack([x, y, z])


def to_local(center, target, global_pts) -> np.ndarray:
    """Vectorised :func:`local_frame` for an array of points of shape (..., 3)."""
    axes = frame_axes(center, target)
    return (np.asarray(global_pts, dtype=float) - np.asarray(center, dtype=float)) @ axes.T


def local_frame(element_center, target, global_pt) -> Point3:
    """Coordinates of ``global_pt`` in the frame centred at ``element_center`` with +z towards ``target``."""
    return Point3.of(to_local(element_center, target, global_pt))


def linear_to_db(x):
    return 10.0 * np.log10(x)


def db_to_linear(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)
