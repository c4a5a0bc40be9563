"""Element layouts on a planar RIS.

A layout is a set of identical box elements on a rectangular grid in the x-y
plane, each with an operating mode.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core_em import BoxVolume, Point3
from .errors import InvalidParameter


class ElementMode(str, enum.Enum):
    TRANSMIT = "transmit"
    REFLECT = "reflect"
    STAR = "star"


@dataclass(frozen=True)
class RisLayout:
    """Identical elements on a grid.

    Parameters
    ----------
    centers : (M, 3) array
        Element centres in metres.
    element_extents : tuple
        Full (x, y, z) extents of one element.
    grid_index : (M, 2) int array
        Column and row of each element on the grid.
    modes : tuple of ElementMode, optional
        Per-element operating mode, STAR by default.
    """

    centers: np.ndarray
    element_extents: tuple
    grid_index: np.ndarray
    modes: tuple = field(default=())

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=float))
        gi = np.atleast_2d(np.asarray(self.grid_index, dtype=int))
        if c.shape[0] == 0 or c.shape[1] != 3 or gi.shape != (c.shape[0], 2):
            raise InvalidParameter("layout needs (M, 3) centres and (M, 2) grid indices, M >= 1")
        ext = tuple(float(e) for e in self.element_extents)
        if len(ext) != 3 or min(ext) <= 0:
            raise InvalidParameter("element extents must be three positive lengths")
        modes = tuple(ElementMode(m) for m in self.modes) if self.modes else (ElementMode.STAR,) * c.shape[0]
        if len(modes) != c.shape[0]:
            raise InvalidParameter("one mode per element required")
        c.setflags(write=False)
        gi.setflags(write=False)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "grid_index", gi)
        object.__setattr__(self, "element_extents", ext)
        object.__setattr__(self, "modes", modes)

    def __len__(self) -> int:
        return self.centers.shape[0]

    @property
    def element_volume(self) -> float:
        ex, ey, ez = self.element_extents
        return ex * ey * ez

    @property
    def width_z(self) -> float:
        return self.element_extents[2]

    def element_box(self, m: int) -> BoxVolume:
        return BoxVolume(Point3.of(self.centers[m]), *self.element_extents)

    def bounding_box(self) -> BoxVolume:
        half = np.asarray(self.element_extents) / 2
        lo = (self.centers - half).min(axis=0)
        hi = (self.centers + half).max(axis=0)
        return BoxVolume(Point3.of((lo + hi) / 2), *(hi - lo))

    def centroid(self, idx=None) -> np.ndarray:
        c = self.centers if idx is None else self.centers[np.asarray(idx)]
        return c.mean(axis=0)

    def translated(self, offset) -> "RisLayout":
        return RisLayout(self.centers + np.asarray(offset, dtype=float), self.element_extents,
                         self.grid_index, self.modes)


def square_layout(n_elements: int, side: float, width_z: float, center=(0.0, 0.0, 0.0)) -> RisLayout:
    """``n_elements`` square elements filled row by row into ``ceil(sqrt(M))`` columns.

    The grid pitch equals the element side, so elements tile without gaps, and
    the bounding box of the occupied cells is centred on ``center``.
    """
    if n_elements < 1:
        raise InvalidParameter("need at least one element")
    nc = math.ceil(math.sqrt(n_elements))
    nr = math.ceil(n_elements / nc)
    idx = np.arange(n_elements)
    ix, iy = idx % nc, idx // nc
    # centre on the bounding box of occupied cells (last row may be partial)
    used_cols = nc if nr > 1 else n_elements
    x = (ix - (used_cols - 1) / 2) * side
    y = (iy - (nr - 1) / 2) * side
    c = np.stack([x, y, np.zeros_like(x, dtype=float)], axis=1) + np.asarray(center, dtype=float)
    return RisLayout(c, (side, side, width_z), np.stack([ix, iy], axis=1))


def rect_layout(size_x: float, size_y: float, element_x: float, element_y: float, width_z: float,
                center=(0.0, 0.0, 0.0)) -> RisLayout:
    """Fill a ``size_x`` by ``size_y`` aperture with a full grid of elements."""
    nx = max(1, int(round(size_x / element_x)))
    ny = max(1, int(round(size_y / element_y)))
    ax = (np.arange(nx) - (nx - 1) / 2) * element_x
    ay = (np.arange(ny) - (ny - 1) / 2) * element_y
    X, Y = np.meshgrid(ax, ay, indexing="ij")
    IX, IY = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    c = np.stack([X.ravel(), Y.ravel(), np.zeros(X.size)], axis=1) + np.asarray(center, dtype=float)
    return RisLayout(c, (element_x, element_y, width_z), np.stack([IX.ravel(), IY.ravel()], axis=1))


def split_blocks(blocks: Sequence[np.ndarray], labels, n_groups: Optional[int] = None) -> list:
    """Intersect blocks with group labels; returns (block index, group label, element indices) triples."""
    labels = np.asarray(labels)
    groups = range(int(labels.max()) + 1 if n_groups is None else n_groups)
    out = []
    for b, idx in enumerate(blocks):
        for g in groups:
            sub = idx[labels[idx] == g]
            if sub.size:
                out.append((b, g, sub))
    return out


__all__ = ["ElementMode", "RisLayout", "square_layout", "rect_layout", "split_blocks"]
