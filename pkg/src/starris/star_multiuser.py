"""Multi-user STAR-RIS strategies: power splitting (PS), random element
grouping (REG) and selective element grouping (SEG).

Every element carries a unit-energy current.  Under PS each element radiates
the normalised sum of focusing functions for all users; under REG and SEG
each element focuses on the one user whose group it belongs to.  Leakage of
a current focused on one user into another user's receiver is weighted by
``sinc(xi)``, where ``xi`` depends on the angle the two users subtend at the
element.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core_em import BoxVolume, Point3, SignalParams
from .errors import DegenerateFrame, InvalidGrouping, InvalidParameter, SingularPoint
from .gain_single import LinkBudget, spot_groups
from .kernel import axis_counts, midpoint_grid
from .layout import RisLayout, split_blocks
from .regions import analytic_dof


class Side(str, enum.Enum):
    TRANSMISSION = "Transmission"
    REFLECTION = "Reflection"


class StrategyKind(str, enum.Enum):
    PS = "PS"
    SEG = "SEG"
    REG = "REG"


@dataclass(frozen=True)
class UserSpec:
    """A receiver on one side of the surface (the surface lies in z = 0)."""

    position: Point3
    receive_volume: BoxVolume
    side: Side

    def __post_init__(self):
        pos = Point3.of(self.position)
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "side", Side(self.side))
        if not np.allclose(self.receive_volume.center, pos, atol=1e-12):
            raise InvalidParameter("receive volume must be centred on the user position")
        expected = Side.TRANSMISSION if pos.z > 0 else Side.REFLECTION
        if pos.z == 0 or expected != self.side:
            raise InvalidParameter(f"user at z = {pos.z} is not on the {self.side.value} side")

    @classmethod
    def at(cls, position, rx_extents) -> "UserSpec":
        pos = Point3.of(position)
        if pos.z == 0:
            raise InvalidParameter("user must not lie in the surface plane")
        side = Side.TRANSMISSION if pos.z > 0 else Side.REFLECTION
        return cls(pos, BoxVolume(pos, *rx_extents), side)

    @property
    def pos(self) -> np.ndarray:
        return np.asarray(self.position)


@dataclass(frozen=True)
class StrategyConfig:
    kind: StrategyKind
    grouping: Optional[tuple] = None
    rng_seed: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", StrategyKind(self.kind))
        if self.kind is StrategyKind.PS and self.grouping is not None:
            raise InvalidParameter("PS uses no grouping")
        if self.grouping is not None:
            object.__setattr__(self, "grouping", tuple(int(g) for g in self.grouping))


@dataclass(frozen=True)
class GainReport:
    per_user_gain: tuple
    per_user_gain_db: tuple
    sum_rate_bps_hz: float


def angle_between_users(element_center, user_p, user_q) -> float:
    """Angle subtended at ``element_center`` by the two users, in [0, pi]."""
    c = np.asarray(tuple(element_center), dtype=float)
    u = np.asarray(tuple(user_p), dtype=float) - c
    v = np.asarray(tuple(user_q), dtype=float) - c
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise DegenerateFrame("user coincides with the element centre")
    return float(np.arccos(np.clip(u @ v / (nu * nv), -1.0, 1.0)))


def _angles(centers, p, q) -> np.ndarray:
    u = np.asarray(p, dtype=float) - centers
    v = np.asarray(q, dtype=float) - centers
    nu = np.linalg.norm(u, axis=-1)
    nv = np.linalg.norm(v, axis=-1)
    if np.any(nu == 0) or np.any(nv == 0):
        raise DegenerateFrame("user coincides with an element centre")
    return np.arccos(np.clip(np.sum(u * v, axis=-1) / (nu * nv), -1.0, 1.0))


def xi_factor(params: SignalParams, alpha, element_width_z: float):
    """``xi = pi (1 - cos alpha) dz / lam``."""
    if not element_width_z > 0:
        raise InvalidParameter("element width must be positive")
    return math.pi * (1.0 - np.cos(alpha)) * element_width_z / params.wavelength_m


def sinc(x):
    """Unnormalised sinc, ``sin(x) / x`` with ``sinc(0) = 1``."""
    out = np.sinc(np.asarray(x, dtype=float) / np.pi)
    return float(out) if out.ndim == 0 else out


def _leak(params, centers, p, q, dz):
    return sinc(xi_factor(params, _angles(centers, p, q), dz))


def _check_users(layout: RisLayout, users: Sequence[UserSpec]):
    if len(users) == 0:
        raise InvalidParameter("need at least one user")
    box = layout.bounding_box()
    for u in users:
        if box.contains(u.position):
            raise SingularPoint("user lies inside the surface volume")
    pos = [tuple(u.position) for u in users]
    if len(set(pos)) != len(pos):
        raise InvalidParameter("users must be distinct")


def _check_grouping(layout: RisLayout, users, grouping) -> np.ndarray:
    if grouping is None:
        raise InvalidGrouping("grouping required")
    g = np.asarray(grouping)
    if g.shape != (len(layout),) or not np.issubdtype(g.dtype, np.integer):
        raise InvalidGrouping("grouping needs one integer label per element")
    if np.any(g < 0) or np.any(g >= len(users)):
        raise InvalidGrouping("grouping label outside the user range")
    return g.astype(int)


def _local_offsets(layout: RisLayout, wavelength: float, samples_per_wavelength: float):
    ext = layout.element_extents
    box = BoxVolume(Point3(0.0, 0.0, 0.0), *ext)
    grid = midpoint_grid(box, axis_counts(box, wavelength, samples_per_wavelength, min_per_axis=4))
    return grid.points, grid.weights


def focusing_batch(params: SignalParams, centers, offsets, target) -> np.ndarray:
    """Focusing function of each element (frame at its centre) at shared local offsets.

    ``centers`` is (M, 3), ``offsets`` (n, 3) global displacements from the
    centre; returns an (M, n) complex array.
    """
    c = np.atleast_2d(np.asarray(centers, dtype=float))
    t = np.asarray(tuple(target), dtype=float)
    v = t - c
    r = np.linalg.norm(v, axis=1)
    if np.any(r == 0):
        raise DegenerateFrame("element centre coincides with its target")
    z = v / r[:, None]
    x = np.cross(np.array([0.0, 1.0, 0.0]), z)
    nx = np.linalg.norm(x, axis=1)
    bad = nx < 1e-12
    x[bad] = np.array([1.0, 0.0, 0.0])
    nx[bad] = 1.0
    x = x / nx[:, None]
    y = np.cross(z, x)
    off = np.asarray(offsets, dtype=float)
    lx = x @ off.T
    ly = y @ off.T
    lz = z @ off.T
    return np.exp(-1j * params.wavenumber * (lz - (lx**2 + ly**2) / (2 * r[:, None])))


def _focus_path(centers, target, off, o2):
    """Phase path ``z.o - (|o|^2 - (z.o)^2) / (2 r)`` of each element's focusing function."""
    v = np.asarray(tuple(target), dtype=float) - centers
    r = np.linalg.norm(v, axis=1)
    if np.any(r == 0):
        raise DegenerateFrame("element centre coincides with its target")
    lz = (v / r[:, None]) @ off.T
    q = lz * lz
    q -= o2
    q /= 2 * r[:, None]
    lz += q
    return lz


def ps_normalisation(params: SignalParams, layout: RisLayout, users: Sequence[UserSpec],
                     samples_per_wavelength: float = 8.0) -> np.ndarray:
    """Per-element ``A_m = (1/V_m) int |sum_p F_m^(p)|^2 dV`` by midpoint quadrature.

    Uses ``|sum_p F_p|^2 = U + 2 sum_{p<q} cos(k (phi_p - phi_q))``; the
    transverse part of each phase path only needs the projection on the look
    direction, so no local frame is built.
    """
    off, w = _local_offsets(layout, params.wavelength_m, samples_per_wavelength)
    o2 = np.einsum("ij,ij->i", off, off)
    k = params.wavenumber
    U = len(users)
    total = np.full(len(layout), U * w.sum())
    # element chunks keep the (elements, samples) work arrays small
    step = max(1, 262_144 // off.shape[0])
    for s in range(0, len(layout), step):
        c = layout.centers[s:s + step]
        paths = [_focus_path(c, u.position, off, o2) for u in users]
        for a in range(U):
            for b in range(a + 1, U):
                d = paths[a] - paths[b]
                d *= k
                np.cos(d, out=d)
                total[s:s + step] += 2 * (d @ w)
    return total / layout.element_volume


def _prefactor(params, budget, user):
    return budget.illumination * params.beta_sq * user.receive_volume.volume()


def gain_ps(params: SignalParams, budget: LinkBudget, layout: RisLayout, users: Sequence[UserSpec],
            target: int, a_m: Optional[np.ndarray] = None) -> float:
    """Gain of user ``target`` when every element serves all users.

    ``a_m`` may be passed to reuse a normalisation from :func:`ps_normalisation`.
    """
    _check_users(layout, users)
    q = users[target]
    A = ps_normalisation(params, layout, users) if a_m is None else np.asarray(a_m)
    coh = np.ones(len(layout))
    for j, p in enumerate(users):
        if j != target:
            coh = coh + _leak(params, layout.centers, p.pos, q.pos, layout.width_z)
    r = np.linalg.norm(layout.centers - q.pos, axis=1)
    terms = layout.element_volume / ((4 * np.pi * r) ** 2 * A) * coh**2
    return _prefactor(params, budget, q) * float(np.sum(terms))


def _blocks_for(params, layout, user):
    return spot_groups(params, layout, user.receive_volume)


def gain_reg(params: SignalParams, budget: LinkBudget, layout: RisLayout, users: Sequence[UserSpec],
             grouping, target: int) -> float:
    """Gain of user ``target`` when elements are split among users and each
    spot collects its own-group count plus sinc-weighted foreign counts."""
    _check_users(layout, users)
    g = _check_grouping(layout, users, grouping)
    p = users[target]
    total = 0.0
    for idx in _blocks_for(params, layout, p):
        c = layout.centroid(idx)
        amp = float(np.count_nonzero(g[idx] == target))
        for j, q in enumerate(users):
            if j == target:
                continue
            mq = np.count_nonzero(g[idx] == j)
            if mq:
                amp += mq * sinc(xi_factor(params, angle_between_users(c, p.position, q.position), layout.width_z))
        r = float(np.linalg.norm(p.pos - c))
        total += layout.element_volume * amp**2 / (4 * np.pi * r) ** 2
    return _prefactor(params, budget, p) * total


def gain_seg(params: SignalParams, budget: LinkBudget, layout: RisLayout, users: Sequence[UserSpec],
             grouping, target: int) -> float:
    """Gain of user ``target`` with spatially contiguous groups: own-group
    spots add coherently, foreign-group spots only through their sinc leakage."""
    _check_users(layout, users)
    g = _check_grouping(layout, users, grouping)
    p = users[target]
    total = 0.0
    for _, label, idx in split_blocks(_blocks_for(params, layout, p), g, len(users)):
        c = layout.centroid(idx)
        amp = float(idx.size)
        if label != target:
            q = users[label]
            amp *= sinc(xi_factor(params, angle_between_users(c, p.position, q.position), layout.width_z))
        r = float(np.linalg.norm(p.pos - c))
        total += layout.element_volume * amp**2 / (4 * np.pi * r) ** 2
    return _prefactor(params, budget, p) * total


def make_grouping(kind, layout: RisLayout, users: Sequence[UserSpec], seed: int = 0) -> tuple:
    """Assign each element to one user.

    SEG hands out elements in ascending element-to-user distance, each user
    taking at most ``floor(M/U)`` elements plus one of the ``M mod U`` spare
    slots; equidistant claims go to the user with the smaller group.  REG is a
    seeded uniform shuffle of balanced labels.
    """
    kind = StrategyKind(kind)
    M, U = len(layout), len(users)
    if U < 1 or M < U:
        raise InvalidParameter(f"need at least as many elements ({M}) as users ({U})")
    if kind is StrategyKind.PS:
        raise InvalidParameter("PS uses no grouping")
    if kind is StrategyKind.REG:
        rng = np.random.default_rng(seed)
        return tuple(int(v) for v in rng.permutation(np.arange(M) % U))
    base, spare = divmod(M, U)
    D = np.stack([np.linalg.norm(layout.centers - u.pos, axis=1) for u in users], axis=1)
    order = np.argsort(D, axis=None, kind="stable")
    labels = np.full(M, -1)
    counts = np.zeros(U, dtype=int)
    spare_used = 0

    def open_(u):
        return counts[u] < base or (counts[u] == base and spare_used < spare)

    for flat in order:
        m, u = divmod(int(flat), U)
        if labels[m] >= 0 or not open_(u):
            continue
        tied = [v for v in range(U) if open_(v) and abs(D[m, v] - D[m, u]) <= 1e-12 * D[m, u]]
        u = min(tied, key=lambda v: (counts[v], D[m, v], v))
        if counts[u] == base:
            spare_used += 1
        labels[m] = u
        counts[u] += 1
    return tuple(int(v) for v in labels)


def sum_rate(gains, tx_power_w: float, noise_w: float) -> float:
    """Shannon sum rate ``sum_p log2(1 + g_p P / N)`` in bit/s/Hz."""
    if not noise_w > 0 or not tx_power_w > 0:
        raise InvalidParameter("power and noise must be positive")
    g = np.asarray(gains, dtype=float)
    if np.any(g < 0):
        raise InvalidParameter("gains must be non-negative")
    return float(np.sum(np.log2(1.0 + g * tx_power_w / noise_w)))


def evaluate_strategy(params: SignalParams, budget: LinkBudget, layout: RisLayout, users: Sequence[UserSpec],
                      config: StrategyConfig, tx_power_w: float, noise_w: float) -> GainReport:
    """Per-user gains and the sum rate for one strategy."""
    if config.kind is StrategyKind.PS:
        A = ps_normalisation(params, layout, users)
        gains = [gain_ps(params, budget, layout, users, i, a_m=A) for i in range(len(users))]
    else:
        grouping = config.grouping
        if grouping is None:
            grouping = make_grouping(config.kind, layout, users, config.rng_seed or 0)
        fn = gain_seg if config.kind is StrategyKind.SEG else gain_reg
        gains = [fn(params, budget, layout, users, grouping, i) for i in range(len(users))]
    g = np.array(gains)
    with np.errstate(divide="ignore"):
        db = 10 * np.log10(g)
    return GainReport(tuple(float(v) for v in g), tuple(float(v) for v in db), sum_rate(g, tx_power_w, noise_w))


def group_dof(params: SignalParams, layout: RisLayout, user: UserSpec, idx=None) -> int:
    """Analytic mode count between ``user`` and the elements ``idx`` (all by default).

    The element set is treated as a slab of the summed element volume at the
    distance of its centroid.
    """
    idx = np.arange(len(layout)) if idx is None else np.asarray(idx)
    if idx.size == 0:
        raise InvalidParameter("empty element set")
    ex, ey, ez = layout.element_extents
    area = idx.size * ex * ey
    side = math.sqrt(area)
    c = layout.centroid(idx)
    tx = BoxVolume(Point3.of(c), side, side, ez)
    r = float(np.linalg.norm(user.pos - c))
    return analytic_dof(params, tx, user.receive_volume, r)


__all__ = [
    "Side", "StrategyKind", "UserSpec", "StrategyConfig", "GainReport", "angle_between_users",
    "xi_factor", "sinc", "focusing_batch", "ps_normalisation", "gain_ps", "gain_reg", "gain_seg",
    "make_grouping", "sum_rate", "evaluate_strategy", "group_dof",
]
