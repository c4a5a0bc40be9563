"""Outdoor-to-indoor case study: a STAR-RIS mounted in a window of a square room.

Room coordinates: the room spans ``0 <= x <= W``, ``0 <= y <= H`` with the
corner O at the origin and the window wall on ``x = 0``.  The base station
illuminates the wall with a plane wave travelling along +x; outdoors is
``x < 0``.  The scene is invariant along z.

Without a window, indoor power comes only from diffraction around the wall
edge at O and falls off as ``1 / (k^2 r lam sin^2 theta)``.  An open window
adds the unfocused aperture field; a STAR-RIS in the window focuses its
transmitted part on a target point.  Aperture and diffraction powers are
added incoherently.

For the multi-user closed forms the surface is described in its own frame:
local x along the room y axis, local y along room z and local z along the
wall normal (+x, indoors), so indoor users sit on the transmission side.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import fresnel

from .core_em import BoxVolume, Point3, SignalParams, db_to_linear
from .errors import InvalidParameter, RegimeMismatch, SingularAngle
from .fileio import atomic_write
from .gain_single import LinkBudget
from .layout import RisLayout, rect_layout
from .regions import analytic_dof, field_boundary, max_farfield_volume
from .star_multiuser import (StrategyConfig, StrategyKind, UserSpec, angle_between_users, gain_ps,
                             gain_reg, gain_seg, make_grouping, ps_normalisation, sinc, xi_factor)

THETA_3DB_DEG = 65.0
MAX_ATTENUATION_DB = 30.0
GUARD_ANGLE_DEG = 2.0


class CoverageMode(str, enum.Enum):
    NO_WINDOW = "NoWindow"
    OPEN_WINDOW = "OpenWindow"
    STAR_RIS = "StarRis"


@dataclass(frozen=True)
class RoomScene:
    """Geometry and radio parameters of the case study (defaults: 30.3 GHz, 4 m room)."""

    params: SignalParams = field(default_factory=lambda: SignalParams.from_wavelength(0.0099))
    room_width_m: float = 4.0
    room_height_m: float = 4.0
    window_center_y: float = 2.0
    window_size_m: float = 0.5
    star_thickness_m: float = 0.05
    user_aperture_m2: float = 0.01
    user_depth_m: float = 0.01
    r_sn_m: float = 2.0
    r_sf_m: float = 20.0
    target: tuple = (1.0, 3.0)
    zone_size_m: float = 0.5
    element_size_m: Optional[float] = None
    budget: LinkBudget = field(default_factory=LinkBudget.unity)

    def __post_init__(self):
        for name in ("room_width_m", "room_height_m", "window_size_m", "star_thickness_m",
                     "user_aperture_m2", "user_depth_m", "r_sn_m", "r_sf_m", "zone_size_m"):
            if not getattr(self, name) > 0:
                raise InvalidParameter(f"{name} must be positive")
        half = self.window_size_m / 2
        if self.window_center_y - half < 0 or self.window_center_y + half > self.room_height_m:
            raise InvalidParameter("window does not fit in the wall")
        tx, ty = self.target
        if not (0 < tx < self.room_width_m and 0 < ty < self.room_height_m):
            raise InvalidParameter("target must be inside the room")

    @property
    def wavelength(self) -> float:
        return self.params.wavelength_m

    @property
    def star_center(self) -> np.ndarray:
        return np.array([0.0, self.window_center_y, 0.0])

    @property
    def star_volume(self) -> BoxVolume:
        """Surface box in its own frame (thickness along local z)."""
        return BoxVolume(Point3(0.0, 0.0, 0.0), self.window_size_m, self.window_size_m, self.star_thickness_m)

    @property
    def user_extents(self) -> tuple:
        s = math.sqrt(self.user_aperture_m2)
        return (s, s, self.user_depth_m)

    def user_volume(self, distance: float) -> BoxVolume:
        return BoxVolume(Point3(0.0, 0.0, distance), *self.user_extents)

    def to_local(self, room_pt) -> tuple:
        x, y, z = (tuple(room_pt) + (0.0,))[:3]
        return (y - self.window_center_y, z, x)

    def star_layout(self) -> RisLayout:
        a = self.wavelength / 2 if self.element_size_m is None else self.element_size_m
        L = self.window_size_m
        return rect_layout(L, L, a, a, self.star_thickness_m)


# ---------------------------------------------------------------- no-STAR laws

def bs_directivity_db(theta) -> float:
    """Horizontal base-station pattern ``-min(12 (theta / 65 deg)^2, 30)`` in dB."""
    t = np.degrees(np.asarray(theta, dtype=float))
    if np.any(np.abs(t) > 180 + 1e-9):
        raise InvalidParameter("angle must lie in [-pi, pi]")
    out = -np.minimum(12.0 * (t / THETA_3DB_DEG) ** 2, MAX_ATTENUATION_DB)
    return float(out) + 0.0 if out.ndim == 0 else out


def gain_outdoor_no_star(scene: RoomScene, theta_F: float, r_OF: float, aperture_F: float) -> float:
    """Direct outdoor gain ``D(theta) A_F / r`` with D converted to linear."""
    if not (r_OF > 0 and aperture_F > 0):
        raise InvalidParameter("distance and aperture must be positive")
    return float(db_to_linear(bs_directivity_db(theta_F))) * aperture_F / r_OF


def gain_indoor_no_star(scene: RoomScene, theta_N, r_ON, aperture_N: float, params: Optional[SignalParams] = None):
    """Edge-diffracted indoor gain ``A_N / (k^2 r lam sin^2 theta)``.

    Relative to a plane wave of unit power density, so with ``aperture_N = 1``
    the result is the power density in units of the incident one.
    """
    p = scene.params if params is None else params
    th = np.asarray(theta_N, dtype=float)
    r = np.asarray(r_ON, dtype=float)
    if np.any(th <= 0) or np.any(th > math.pi / 2 + 1e-12):
        if np.any(th == 0):
            raise SingularAngle("diffraction law diverges at the shadow edge")
        raise InvalidParameter("theta_N must lie in (0, pi/2]")
    if np.any(r <= 0):
        raise InvalidParameter("r_ON must be positive")
    out = aperture_N / (p.wavenumber**2 * r * p.wavelength_m * np.sin(th) ** 2)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------- STAR-aided gains

def _users(scene: RoomScene, near_room, far_room):
    ext = scene.user_extents
    return [UserSpec.at(scene.to_local(far_room), ext), UserSpec.at(scene.to_local(near_room), ext)]


def default_positions(scene: RoomScene, theta_N: float = math.radians(45), theta_F: float = math.radians(30)):
    """Default user positions for angle ``theta_N`` / ``theta_F``.

    The near user sits on the circle of radius r_SN around the surface at
    ``S + r_SN (sin 2 theta, -cos 2 theta)``.  When the window centre is r_SN
    above O this circle passes through O and ``theta_N`` is exactly the angle
    between ON and the x axis.  The far user is r_SF outdoors at ``theta_F``
    from the wall normal.
    """
    near = (scene.r_sn_m * math.sin(2 * theta_N),
            scene.window_center_y - scene.r_sn_m * math.cos(2 * theta_N), 0.0)
    far = (-scene.r_sf_m * math.cos(theta_F), scene.window_center_y + scene.r_sf_m * math.sin(theta_F), 0.0)
    return near, far


def check_regimes(scene: RoomScene, near_room, far_room) -> float:
    """Raise RegimeMismatch unless the near user is inside and the far user beyond r_b."""
    rx = scene.user_volume(1.0)
    r_b = field_boundary(scene.params, scene.star_volume, rx)
    s = scene.star_center
    rn = float(np.linalg.norm(np.asarray(near_room, float) - s))
    rf = float(np.linalg.norm(np.asarray(far_room, float) - s))
    if rn > r_b:
        raise RegimeMismatch(f"near user at {rn:.3g} m lies beyond r_b = {r_b:.3g} m")
    if rf <= r_b:
        raise RegimeMismatch(f"far user at {rf:.3g} m does not lie beyond r_b = {r_b:.3g} m")
    return r_b


def gain_with_star(scene: RoomScene, strategy: StrategyConfig, target: str, near_room=None, far_room=None,
                   layout: Optional[RisLayout] = None) -> float:
    """STAR-aided gain of user ``"F"`` (outdoor, far field) or ``"N"`` (indoor, near field).

    The far user sees the whole surface as one spot, so constant distance and
    leakage factors apply.  The near user keeps the per-element (PS) or
    per-spot (REG, SEG) sums.
    """
    target = target.upper()
    if target not in ("F", "N"):
        raise InvalidParameter("target must be 'F' or 'N'")
    if near_room is None or far_room is None:
        dn, df = default_positions(scene)
        near_room = dn if near_room is None else near_room
        far_room = df if far_room is None else far_room
    check_regimes(scene, near_room, far_room)
    lay = scene.star_layout() if layout is None else layout
    users = _users(scene, near_room, far_room)
    far, near = users
    p = scene.params
    pref = scene.budget.illumination * p.beta_sq * far.receive_volume.volume()
    if strategy.kind is StrategyKind.PS:
        A = ps_normalisation(p, lay, users)
        if target == "N":
            return gain_ps(p, scene.budget, lay, users, 1, a_m=A)
        c = lay.centroid()
        s = sinc(xi_factor(p, angle_between_users(c, far.position, near.position), lay.width_z))
        r = float(np.linalg.norm(far.pos - c))
        v_star = lay.element_volume * len(lay)
        return pref * v_star * (1 + s) ** 2 / ((4 * np.pi * r) ** 2 * float(np.mean(A)))
    grouping = strategy.grouping
    if grouping is None:
        grouping = make_grouping(strategy.kind, lay, users, strategy.rng_seed or 0)
    if target == "N":
        fn = gain_seg if strategy.kind is StrategyKind.SEG else gain_reg
        return fn(p, scene.budget, lay, users, grouping, 1)
    g = np.asarray(grouping)
    m_f = float(np.count_nonzero(g == 0))
    m_n = float(np.count_nonzero(g == 1))
    c = lay.centroid()
    s = sinc(xi_factor(p, angle_between_users(c, far.position, near.position), lay.width_z))
    r = float(np.linalg.norm(far.pos - c))
    return pref * lay.element_volume * (m_f**2 + (m_n * s) ** 2) / (4 * np.pi * r) ** 2


def hybrid_summary(scene: RoomScene) -> dict:
    """Field boundary, spot volumes and mode counts for both users."""
    p = scene.params
    tx = scene.star_volume
    out = {"r_b": field_boundary(p, tx, scene.user_volume(1.0))}
    for name, r in (("N", scene.r_sn_m), ("F", scene.r_sf_m)):
        rx = scene.user_volume(r)
        out[f"delta_v_{name}"] = max_farfield_volume(p, rx, r, tx.extent_z)
        out[f"dof_{name}"] = analytic_dof(p, tx, rx, r)
    out["v_star"] = tx.volume()
    return out


# ---------------------------------------------------------------- coverage

@dataclass(frozen=True)
class CoverageGrid:
    """Indoor power map in dB relative to the incident plane wave at O.

    ``values[j, i]`` is the cell centred at ``(x[i], y[j])``; masked cells
    hold NaN.
    """

    resolution: float
    values: np.ndarray
    mode: CoverageMode
    x: np.ndarray
    y: np.ndarray
    reference_db: float = 0.0

    @property
    def cell_size(self) -> float:
        return 1.0 / self.resolution

    @property
    def mask(self) -> np.ndarray:
        return np.isnan(self.values)

    def region_mean_db(self, x0, x1, y0, y1) -> float:
        """dB of the linear mean power over cells with centres in the rectangle."""
        X, Y = np.meshgrid(self.x, self.y, indexing="xy")
        sel = (X >= x0) & (X <= x1) & (Y >= y0) & (Y <= y1) & ~self.mask
        if not np.any(sel):
            raise InvalidParameter("region contains no cells")
        return float(10 * np.log10(np.mean(db_to_linear(self.values[sel]))))

    def argmin(self) -> tuple:
        j, i = np.unravel_index(np.nanargmin(self.values), self.values.shape)
        return float(self.x[i]), float(self.y[j])

    def argmax(self) -> tuple:
        j, i = np.unravel_index(np.nanargmax(self.values), self.values.shape)
        return float(self.x[i]), float(self.y[j])


def _strip_integral(u, half):
    """``int_{-half}^{half} exp(-j u z^2) dz`` for an array of u."""
    u = np.asarray(u, dtype=float)
    out = np.full(u.shape, 2.0 * half, dtype=complex)
    big = np.abs(u) * half * half > 1e-8
    ua = np.abs(u[big])
    T = half * np.sqrt(2 * ua / np.pi)
    S, C = fresnel(T)
    val = np.sqrt(np.pi / (2 * ua)) * 2 * (C - 1j * S)
    out[big] = np.where(u[big] > 0, val, np.conj(val))
    return out


def aperture_field(scene: RoomScene, points_xy: np.ndarray, amplitude: np.ndarray, focus=None,
                   samples_per_wavelength: float = 4.0) -> np.ndarray:
    """Field behind the window for aperture field ``amplitude(y) * exp(+jk R_focus)``.

    The aperture is sampled along y; along z the Fresnel integral is done in
    closed form, assuming a quadratic phase in z.  ``amplitude`` is evaluated
    on :func:`aperture_samples`.  With ``focus=None`` the aperture phase is
    uniform.  Incident field amplitude is 1.
    """
    k = scene.params.wavenumber
    ys, dy = aperture_samples(scene, samples_per_wavelength)
    amp = np.asarray(amplitude, dtype=complex)
    half = scene.window_size_m / 2
    P = np.asarray(points_xy, dtype=float)
    E = np.zeros(P.shape[0], dtype=complex)
    if focus is not None:
        fx, fy = focus
        rho_t = np.hypot(fx, fy - ys)
    for s in range(0, P.shape[0], 2048):
        px = P[s:s + 2048, 0:1]
        py = P[s:s + 2048, 1:2]
        rho = np.hypot(px, py - ys[None, :])
        if focus is None:
            phase = -k * rho
            u = k / (2 * rho)
        else:
            phase = -k * (rho - rho_t[None, :])
            u = k * (1 / (2 * rho) - 1 / (2 * rho_t[None, :]))
        kern = np.exp(1j * phase) / rho * _strip_integral(u, half)
        E[s:s + 2048] = (1j * k / (2 * np.pi)) * dy * (kern @ amp)
    return E


def aperture_samples(scene: RoomScene, samples_per_wavelength: float = 4.0):
    L = scene.window_size_m
    n = max(2, math.ceil(L / scene.wavelength * samples_per_wavelength))
    ys = scene.window_center_y - L / 2 + (np.arange(n) + 0.5) * L / n
    return ys, L / n


def strip_amplitudes(scene: RoomScene, strategy: Optional[StrategyConfig],
                     samples_per_wavelength: float = 4.0) -> np.ndarray:
    """Transmitted amplitude per aperture strip for a STAR strategy.

    PS splits every element's power evenly, so each strip transmits with
    amplitude ``1/sqrt(2)``.  Under SEG the half of the window nearer the
    indoor target transmits fully and the other half reflects; under REG a
    seeded random half of the strips transmits.
    """
    ys, _ = aperture_samples(scene, samples_per_wavelength)
    n = ys.size
    kind = StrategyKind.PS if strategy is None else strategy.kind
    if kind is StrategyKind.PS:
        return np.full(n, 1 / math.sqrt(2))
    if kind is StrategyKind.SEG:
        d = np.abs(ys - scene.target[1])
        order = np.argsort(d, kind="stable")
        amp = np.zeros(n)
        amp[order[: (n + 1) // 2]] = 1.0
        return amp
    rng = np.random.default_rng(strategy.rng_seed or 0)
    return rng.permutation(np.arange(n) % 2 == 0).astype(float)


def cell_centers(scene: RoomScene, resolution: float):
    nx = int(round(scene.room_width_m * resolution))
    ny = int(round(scene.room_height_m * resolution))
    x = (np.arange(nx) + 0.5) * scene.room_width_m / nx
    y = (np.arange(ny) + 0.5) * scene.room_height_m / ny
    return x, y


def coverage_grid(scene: RoomScene, mode, strategy: Optional[StrategyConfig] = None,
                  resolution: float = 20.0, samples_per_wavelength: float = 4.0) -> CoverageGrid:
    """Indoor power map for one mode.  Cells within 2 degrees of the shadow edge are masked."""
    mode = CoverageMode(mode)
    if resolution < 10:
        raise InvalidParameter("resolution must be at least 10 points per metre")
    x, y = cell_centers(scene, resolution)
    X, Y = np.meshgrid(x, y, indexing="xy")
    r = np.hypot(X, Y)
    th = np.arctan2(Y, X)
    P = gain_indoor_no_star(scene, th, r, 1.0)
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    if mode is CoverageMode.OPEN_WINDOW:
        ys, _ = aperture_samples(scene, samples_per_wavelength)
        E = aperture_field(scene, pts, np.ones(ys.size), None, samples_per_wavelength)
        P = P + (np.abs(E) ** 2).reshape(P.shape)
    elif mode is CoverageMode.STAR_RIS:
        amp = strip_amplitudes(scene, strategy, samples_per_wavelength)
        E = aperture_field(scene, pts, amp, scene.target, samples_per_wavelength)
        P = P + (np.abs(E) ** 2).reshape(P.shape)
    vals = 10 * np.log10(P)
    vals[th < math.radians(GUARD_ANGLE_DEG)] = np.nan
    return CoverageGrid(float(resolution), vals, mode, x, y)


def zone_bounds(scene: RoomScene) -> tuple:
    tx, ty = scene.target
    h = scene.zone_size_m / 2
    return (tx - h, tx + h, ty - h, ty + h)


def corner_region(scene: RoomScene) -> tuple:
    """Top-left quarter-by-quarter corner of the room (far wall side, high y)."""
    return (0.0, scene.room_width_m / 4, 3 * scene.room_height_m / 4, scene.room_height_m)


def write_raster(path, grid: CoverageGrid):
    """Write the grid as text: ``nx ny cell_size ref_dB`` then rows of dB values (NaN when masked)."""
    ny, nx = grid.values.shape
    lines = [f"{nx} {ny} {grid.cell_size:.9g} {grid.reference_db:.2f}"]
    for row in grid.values:
        lines.append(" ".join("NaN" if np.isnan(v) else f"{v:.2f}" for v in row))
    atomic_write(path, "\n".join(lines) + "\n")


def read_raster(path) -> tuple:
    """Return ``(values, cell_size, reference_db)`` from a raster file."""
    with open(path, encoding="utf-8") as fh:
        head = fh.readline().split()
        nx, ny = int(head[0]), int(head[1])
        cell, ref = float(head[2]), float(head[3])
        vals = np.array([[float(t) for t in line.split()] for line in fh if line.strip()])
    if vals.shape != (ny, nx):
        raise InvalidParameter(f"raster body has shape {vals.shape}, header says {(ny, nx)}")
    return vals, cell, ref


# ---------------------------------------------------------------- angle sweep

SWEEP_COLUMNS = ("theta_deg", "gain_F_noStar_db", "gain_N_noStar_db", "gain_F_PS_db", "gain_N_PS_db")


REFERENCE_THETA_N = math.radians(45.0)
REFERENCE_THETA_F = 0.0


def angle_sweep(scene: RoomScene, angles: Sequence[float]) -> np.ndarray:
    """Gains in dB versus angle, one row per angle, columns as ``SWEEP_COLUMNS``.

    Each user's gain is swept over its own angle while the other user stays
    at its reference angle (near user 45 degrees, far user on the wall
    normal).  Without the surface the laws are evaluated at the fixed
    reference distances r_SF and r_SN so that only their angular dependence
    shows.  With the surface (PS) both users stay at fixed distance from it,
    as placed by :func:`default_positions`.
    """
    lay = scene.star_layout()
    ps = StrategyConfig(StrategyKind.PS)
    near_ref, far_ref = default_positions(scene, REFERENCE_THETA_N, REFERENCE_THETA_F)
    rows = []
    for th in angles:
        if not 0 < th < math.pi / 2:
            raise InvalidParameter("angles must lie in (0, pi/2)")
        f_no = gain_outdoor_no_star(scene, th, scene.r_sf_m, scene.user_aperture_m2)
        n_no = gain_indoor_no_star(scene, th, scene.r_sn_m, scene.user_aperture_m2)
        near, far = default_positions(scene, th, th)
        f_ps = gain_with_star(scene, ps, "F", near_ref, far, lay)
        n_ps = gain_with_star(scene, ps, "N", near, far_ref, lay)
        rows.append((math.degrees(th), *(10 * np.log10([f_no, n_no, f_ps, n_ps]))))
    return np.array(rows)


__all__ = [
    "CoverageMode", "RoomScene", "CoverageGrid", "bs_directivity_db", "gain_outdoor_no_star",
    "gain_indoor_no_star", "default_positions", "check_regimes", "gain_with_star", "hybrid_summary",
    "aperture_field", "aperture_samples", "strip_amplitudes", "coverage_grid", "zone_bounds",
    "corner_region", "write_raster", "read_raster", "angle_sweep", "SWEEP_COLUMNS",
]
