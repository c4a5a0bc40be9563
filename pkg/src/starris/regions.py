"""Field-region classification for a transmitting volume and a receiver.

Provides the radiating near/far boundary, the largest source volume that
still behaves as a single focusing spot, the analytic number of spatial
modes and the reactive-near-field boundary.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .core_em import BoxVolume, SignalParams
from .errors import DegenerateRegion, InvalidParameter

REACTIVE_COEFF = 0.62


class Region(str, enum.Enum):
    REACTIVE = "Reactive"
    RADIATING_NEAR_FIELD = "RadiatingNearField"
    FAR_FIELD = "FarField"


@dataclass(frozen=True)
class FieldRegionReport:
    boundary_rb_m: float
    reactive_rr_m: float
    region: Region
    delta_vt_max_m3: float
    dof: int
    distance_m: float


def _positive(name, v):
    if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
        raise InvalidParameter(f"{name} must be positive, got {v!r}")


def field_boundary(params: SignalParams, tx: BoxVolume, rx: BoxVolume) -> float:
    """Radiating near/far boundary ``sqrt(2 A_T / lam) * sqrt(2 A_R / lam)``."""
    lam = params.wavelength_m
    return math.sqrt(2 * tx.face_area / lam) * math.sqrt(2 * rx.face_area / lam)


def max_farfield_volume(params: SignalParams, rx: BoxVolume, distance_m: float, tx_width_z: float) -> float:
    """Largest source volume focusing into a single spot on ``rx`` at ``distance_m``."""
    _positive("distance_m", distance_m)
    _positive("tx_width_z", tx_width_z)
    lr = params.wavelength_m * distance_m
    return (lr / (2 * rx.extent_x)) * (lr / (2 * rx.extent_y)) * 2 * tx_width_z


def dof_ratio(params: SignalParams, tx: BoxVolume, rx: BoxVolume, distance_m: float) -> float:
    """Real-valued mode count ``2 V_T V_R / ((lam r)^2 dz_T dz_R)`` before rounding."""
    _positive("distance_m", distance_m)
    lr = params.wavelength_m * distance_m
    return 2 * tx.volume() * rx.volume() / (lr * lr * tx.extent_z * rx.extent_z)


def analytic_dof(params: SignalParams, tx: BoxVolume, rx: BoxVolume, distance_m: float) -> int:
    """Number of spatial modes; 1 when the source fits in one far-field spot."""
    if tx.volume() <= max_farfield_volume(params, rx, distance_m, tx.extent_z):
        return 1
    return max(1, math.ceil(dof_ratio(params, tx, rx, distance_m) - 1e-12))


def reactive_boundary(params: SignalParams, tx: BoxVolume) -> float:
    """Reactive-near-field radius ``0.62 sqrt(L^3 / lam)`` with L the largest extent."""
    L = tx.max_extent
    return REACTIVE_COEFF * math.sqrt(L**3 / params.wavelength_m)


def region_of(distance_m: float, r_r: float, r_b: float) -> Region:
    """Region label for a distance; ties at ``r_b`` fall on the near-field side."""
    if distance_m <= r_r:
        return Region.REACTIVE
    if distance_m <= r_b:
        return Region.RADIATING_NEAR_FIELD
    return Region.FAR_FIELD


def classify(params: SignalParams, tx: BoxVolume, rx: BoxVolume, distance_m: float) -> FieldRegionReport:
    _positive("distance_m", distance_m)
    r_b = field_boundary(params, tx, rx)
    r_r = reactive_boundary(params, tx)
    if r_r >= r_b:
        raise DegenerateRegion(f"reactive radius {r_r:.4g} m is not inside boundary {r_b:.4g} m")
    return FieldRegionReport(
        boundary_rb_m=r_b,
        reactive_rr_m=r_r,
        region=region_of(distance_m, r_r, r_b),
        delta_vt_max_m3=max_farfield_volume(params, rx, distance_m, tx.extent_z),
        dof=analytic_dof(params, tx, rx, distance_m),
        distance_m=distance_m,
    )


@dataclass(frozen=True)
class BoundaryRow:
    label: str
    frequency_hz: float
    wavelength_m: float
    boundary_rb_m: float
    reactive_rr_m: float
    degenerate: bool


def boundary_row(label: str, params: SignalParams, tx: BoxVolume, rx: BoxVolume) -> BoundaryRow:
    """Boundary summary that flags, rather than raises on, a degenerate configuration."""
    r_b = field_boundary(params, tx, rx)
    r_r = reactive_boundary(params, tx)
    return BoundaryRow(label, params.frequency_hz, params.wavelength_m, r_b, r_r, r_r >= r_b)


__all__ = [
    "Region", "FieldRegionReport", "BoundaryRow", "field_boundary", "max_farfield_volume",
    "dof_ratio", "analytic_dof", "reactive_boundary", "region_of", "classify", "boundary_row",
]
