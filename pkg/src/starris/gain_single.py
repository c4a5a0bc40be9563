"""Single-user channel-gain bound, power scaling with element count, and the
two-surface element model linking surface currents to T&R coefficients.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .core_em import BoxVolume, Point3, SignalParams
from .errors import InvalidParameter, SingularPoint
from .kernel import build_kernel_matrix, dominant_eigenpair, wavelength_grid
from .layout import RisLayout, square_layout
from .regions import max_farfield_volume


@dataclass(frozen=True)
class LinkBudget:
    """Base-station illumination of the surface.

    ``illumination`` is the fraction ``D A_T / (4 pi d^2)`` of the radiated
    power that lands on the surface aperture.
    """

    bs_directivity: float
    bs_distance_m: float
    tx_aperture_m2: float

    def __post_init__(self):
        if not self.bs_directivity >= 0:
            raise InvalidParameter("directivity must be non-negative")
        if not (self.bs_distance_m > 0 and self.tx_aperture_m2 > 0):
            raise InvalidParameter("distance and aperture must be positive")
        if self.illumination > 1:
            warnings.warn(f"illumination factor {self.illumination:.3g} exceeds 1; inputs look unphysical",
                          RuntimeWarning, stacklevel=2)

    @property
    def illumination(self) -> float:
        return self.bs_directivity * self.tx_aperture_m2 / (4 * math.pi * self.bs_distance_m**2)

    @classmethod
    def unity(cls) -> "LinkBudget":
        """Budget with illumination exactly 1, for gains normalised to the surface."""
        return cls(4 * math.pi, 1.0, 1.0)


def _wrap(phase: float) -> float:
    w = math.remainder(phase, 2 * math.pi)
    return math.pi if w == -math.pi else w


@dataclass(frozen=True)
class ElementCurrents:
    """Surface current amplitudes and phases on the incident (1) and far (2) faces."""

    j1_amp: float
    j1_phase: float
    j2_amp: float
    j2_phase: float

    def __post_init__(self):
        if self.j1_amp < 0 or self.j2_amp < 0:
            raise InvalidParameter("current amplitudes must be non-negative")
        object.__setattr__(self, "j1_phase", _wrap(self.j1_phase))
        object.__setattr__(self, "j2_phase", _wrap(self.j2_phase))

    @property
    def j1(self) -> complex:
        return self.j1_amp * complex(math.cos(self.j1_phase), math.sin(self.j1_phase))

    @property
    def j2(self) -> complex:
        return self.j2_amp * complex(math.cos(self.j2_phase), math.sin(self.j2_phase))


def tr_from_currents(currents: ElementCurrents) -> tuple:
    """Transmission and reflection factors of a quarter-wave-thick element.

    The two faces are a quarter wavelength apart, so each face's radiation
    picks up a ``j`` when referred to the opposite side::

        T = j J1 + J2,   R = J1 + j J2

    The common Green's-function factor is omitted.
    """
    j1, j2 = currents.j1, currents.j2
    return 1j * j1 + j2, j1 + 1j * j2


@dataclass(frozen=True)
class TilePartition:
    tiles: tuple
    parent: BoxVolume

    def __len__(self) -> int:
        return len(self.tiles)

    @property
    def volumes(self) -> np.ndarray:
        return np.array([t.volume() for t, _ in self.tiles])

    @property
    def distances(self) -> np.ndarray:
        return np.array([r for _, r in self.tiles])


MAX_TILES = 200_000


def _row_tiling(Lx, Ly, n, ny):
    """Equal-area tiling of an Lx by Ly face into n tiles over ny rows.

    Yields (x0, y0, width, height) in face coordinates starting at the corner.
    """
    base, extra = divmod(n, ny)
    y0 = 0.0
    for row in range(ny):
        count = base + (1 if row < extra else 0)
        h = Ly * count / n
        w = Lx / count
        for col in range(count):
            yield col * w, y0, w, h
        y0 += h


def partition_tiles(params: SignalParams, tx: BoxVolume, rx: BoxVolume, rx_center=None,
                    per_tile_distance: bool = True) -> TilePartition:
    """Cut the surface into the fewest equal-area tiles that each fit one far-field spot.

    Tiles are laid out in rows whose aspect follows the receiver's, so each tile
    roughly matches the spot shape.  Each tile is tested against the spot
    volume at its own distance to the receiver; with ``per_tile_distance=False``
    the distance from the surface centre is used for every tile.
    """
    rc = np.asarray(rx.center if rx_center is None else tuple(rx_center), dtype=float)
    if tx.contains(rc):
        raise SingularPoint("receiver centre lies inside the surface volume")
    Lx, Ly, dz = tx.extents
    cx, cy, cz = tx.center
    rho = rx.extent_y / rx.extent_x
    area = Lx * Ly
    r0 = float(np.linalg.norm(rc - np.asarray(tx.center)))
    # every tile is at most as far as the farthest face corner, which bounds n from below
    corners = np.array([[cx + sx * Lx / 2, cy + sy * Ly / 2, cz] for sx in (-1, 1) for sy in (-1, 1)])
    r_far = float(np.max(np.linalg.norm(corners - rc, axis=1))) if per_tile_distance else r0
    n_start = max(1, math.ceil(tx.volume() / max_farfield_volume(params, rx, r_far, dz) - 1e-9))
    for n in range(n_start, MAX_TILES + 1):
        ny = min(n, max(1, int(round(Ly * math.sqrt(n * rho / area)))))
        rects = np.array(list(_row_tiling(Lx, Ly, n, ny)))
        centers = np.stack([cx - Lx / 2 + rects[:, 0] + rects[:, 2] / 2,
                            cy - Ly / 2 + rects[:, 1] + rects[:, 3] / 2,
                            np.full(n, cz)], axis=1)
        if per_tile_distance:
            r = np.linalg.norm(centers - rc, axis=1)
        else:
            r = np.full(n, r0)
        vol = rects[:, 2] * rects[:, 3] * dz
        lr = params.wavelength_m * r
        limit = (lr / (2 * rx.extent_x)) * (lr / (2 * rx.extent_y)) * 2 * dz
        if np.all(vol <= limit * (1 + 1e-12)):
            tiles = tuple((BoxVolume(Point3.of(c), w, h, dz), float(ri))
                          for c, (_, _, w, h), ri in zip(centers, rects, r))
            return TilePartition(tiles, tx)
    raise InvalidParameter(f"surface needs more than {MAX_TILES} tiles")


def channel_gain_upper_bound(params: SignalParams, budget: LinkBudget, partition: TilePartition,
                             rx: BoxVolume) -> float:
    """Best achievable gain ``illum |beta|^2 sum_i V_R dV_i / (4 pi r_i)^2``."""
    v = partition.volumes
    r = partition.distances
    return budget.illumination * params.beta_sq * float(np.sum(rx.volume() * v / (4 * np.pi * r) ** 2))


def single_tile_gain(params: SignalParams, budget: LinkBudget, tx: BoxVolume, rx: BoxVolume,
                     distance: Optional[float] = None) -> float:
    """Gain when the whole surface acts as one far-field spot."""
    r = float(np.linalg.norm(np.asarray(rx.center) - np.asarray(tx.center))) if distance is None else distance
    return budget.illumination * params.beta_sq * rx.volume() * tx.volume() / (4 * math.pi * r) ** 2


def power_scaling(params: SignalParams, element_volume: float, element_layout: Iterable,
                  rx_volume: float, budget: Optional[LinkBudget] = None) -> float:
    """Received power ``illum |beta|^2 V_R sum_i V_ele^2 M_i^2 / (4 pi r_i)^2``.

    ``element_layout`` holds ``(M_i, r_i)`` pairs: the number of elements in
    each far-field spot and that spot's distance to the receiver.
    """
    if not element_volume > 0 or not rx_volume > 0:
        raise InvalidParameter("volumes must be positive")
    pairs = np.array(list(element_layout), dtype=float).reshape(-1, 2)
    if pairs.shape[0] == 0 or np.any(pairs[:, 0] < 0) or pairs[:, 0].sum() < 1:
        raise InvalidParameter("need at least one element")
    if np.any(pairs[:, 1] <= 0):
        raise InvalidParameter("distances must be positive")
    illum = 1.0 if budget is None else budget.illumination
    M, r = pairs[:, 0], pairs[:, 1]
    return illum * params.beta_sq * rx_volume * float(np.sum(element_volume**2 * M**2 / (4 * np.pi * r) ** 2))


def spot_groups(params: SignalParams, layout: RisLayout, rx: BoxVolume) -> list:
    """Group elements by the far-field tile of the layout's bounding box that holds their centre.

    The bounding box is tiled with :func:`partition_tiles`; empty tiles are
    dropped.  Returns a list of element-index arrays.
    """
    box = layout.bounding_box()
    part = partition_tiles(params, box, rx)
    tc = np.array([t.center[:2] for t, _ in part.tiles])
    half = np.array([(t.extent_x / 2, t.extent_y / 2) for t, _ in part.tiles])
    rel = np.abs(layout.centers[:, None, :2] - tc[None, :, :])
    tol = 1e-9 * max(box.extent_x, box.extent_y)
    inside = np.all(rel <= half[None, :, :] + tol, axis=2)
    owner = np.argmax(inside, axis=1)
    return [np.flatnonzero(owner == t) for t in np.unique(owner)]


def layout_spots(params: SignalParams, layout: RisLayout, rx: BoxVolume) -> list:
    """``(M_i, r_i)`` pairs: element count and centroid distance of each occupied far-field tile."""
    rc = np.asarray(rx.center)
    return [(idx.size, float(np.linalg.norm(rc - layout.centroid(idx)))) for idx in spot_groups(params, layout, rx)]


def layout_power(params: SignalParams, layout: RisLayout, rx: BoxVolume,
                 budget: Optional[LinkBudget] = None) -> float:
    return power_scaling(params, layout.element_volume, layout_spots(params, layout, rx), rx.volume(), budget)


def scaling_sweep(params: SignalParams, element_sides: Sequence[float], counts: Sequence[int],
                  rx: BoxVolume, width_z: Optional[float] = None,
                  budget: Optional[LinkBudget] = None) -> dict:
    """Received power for square layouts of each element side and each element count.

    Returns ``{side: array of powers aligned with counts}``.  The surface sits at
    the origin and the receiver where ``rx`` says.
    """
    dz = params.wavelength_m / 4 if width_z is None else width_z
    out = {}
    for a in element_sides:
        out[float(a)] = np.array([layout_power(params, square_layout(int(M), a, dz), rx, budget)
                                  for M in counts])
    return out


def loglog_slope(x, y) -> float:
    """Least-squares slope of log(y) against log(x)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.any(x <= 0) or np.any(y <= 0):
        raise InvalidParameter("need at least two positive samples")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def kernel_oracle_gain(params: SignalParams, budget: LinkBudget, tx: BoxVolume, rx: BoxVolume,
                       samples_per_wavelength: float = 4.0) -> float:
    """Best gain from the dominant eigenvalue of the discretised kernel."""
    tx_grid = wavelength_grid(tx, params.wavelength_m, samples_per_wavelength)
    rx_grid = wavelength_grid(rx, params.wavelength_m, samples_per_wavelength)
    lam, _ = dominant_eigenpair(build_kernel_matrix(params, tx_grid, rx, rx_grid))
    return budget.illumination * lam


def gain_vs_distance(params: SignalParams, budget: LinkBudget, tx: BoxVolume, rx_extents,
                     distances: Sequence[float], per_tile_distance: bool = True) -> np.ndarray:
    """Upper-bound gain with the receiver on the surface axis at each distance."""
    out = []
    for d in distances:
        rx = BoxVolume(Point3(tx.center.x, tx.center.y, tx.center.z + d), *rx_extents)
        part = partition_tiles(params, tx, rx, per_tile_distance=per_tile_distance)
        out.append(channel_gain_upper_bound(params, budget, part, rx))
    return np.array(out)


__all__ = [
    "LinkBudget", "ElementCurrents", "TilePartition", "tr_from_currents", "partition_tiles",
    "channel_gain_upper_bound", "single_tile_gain", "power_scaling", "layout_spots",
    "spot_groups", "layout_power", "scaling_sweep", "loglog_slope", "kernel_oracle_gain", "gain_vs_distance",
    "max_farfield_volume",
]
