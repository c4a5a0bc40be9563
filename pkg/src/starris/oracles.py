"""Brute-force field integration used to check the multi-user closed forms.

Each element is sampled on a fine grid, the prescribed currents are
superposed, the field is propagated with the full Green's function and
``|E|^2`` is integrated over the receiver.  Nothing here relies on the
paraxial or sinc approximations.
"""

from __future__ import annotations

import numpy as np

from .core_em import BoxVolume, Point3, SignalParams
from .gain_single import LinkBudget
from .kernel import midpoint_grid
from .gain_single import spot_groups
from .layout import RisLayout
from .star_multiuser import UserSpec, focusing_batch

DEFAULT_ELEMENT_SAMPLES = (6, 6, 8)
DEFAULT_RX_SAMPLES = (20, 20, 4)


def _element_offsets(layout: RisLayout, samples):
    g = midpoint_grid(BoxVolume(Point3(0.0, 0.0, 0.0), *layout.element_extents), samples)
    return g.points, g.weights


def _received(params, src_pts, src_w, currents, user: UserSpec, rx_samples) -> float:
    rx = midpoint_grid(user.receive_volume, rx_samples)
    E = np.zeros(len(rx), dtype=complex)
    # chunk over sources to bound memory
    step = max(1, 4_000_000 // max(1, len(rx)))
    for s in range(0, src_pts.shape[0], step):
        d = np.linalg.norm(rx.points[:, None, :] - src_pts[None, s:s + step, :], axis=2)
        G = -params.beta * np.exp(-1j * params.wavenumber * d) / (4 * np.pi * d)
        E += G @ (src_w[s:s + step] * currents[s:s + step])
    return float(np.sum(rx.weights * np.abs(E) ** 2))


def brute_force_ps(params: SignalParams, budget: LinkBudget, layout: RisLayout, users, target: int,
                   element_samples=DEFAULT_ELEMENT_SAMPLES, rx_samples=DEFAULT_RX_SAMPLES) -> float:
    """Directly integrated PS gain: each element radiates the energy-normalised
    sum of its per-user focusing functions."""
    off, w = _element_offsets(layout, element_samples)
    M, n = len(layout), off.shape[0]
    S = np.zeros((M, n), dtype=complex)
    for u in users:
        S += focusing_batch(params, layout.centers, off, u.position)
    energy = np.abs(S) ** 2 @ w
    J = S / np.sqrt(energy)[:, None]
    pts = (layout.centers[:, None, :] + off[None, :, :]).reshape(-1, 3)
    ww = np.tile(w, M)
    return budget.illumination * _received(params, pts, ww, J.ravel(), users[target], rx_samples)


def brute_force_grouped(params: SignalParams, budget: LinkBudget, layout: RisLayout, users, grouping,
                        target: int, element_samples=DEFAULT_ELEMENT_SAMPLES,
                        rx_samples=DEFAULT_RX_SAMPLES) -> float:
    """Directly integrated gain when each element focuses on its own group's user.

    Elements inside one far-field spot of the target share a focusing frame
    placed at the spot centre, so their phases line up across the spot.
    Each element current has unit energy.
    """
    off, w = _element_offsets(layout, element_samples)
    g = np.asarray(grouping)
    p = users[target]
    blocks = spot_groups(params, layout, p.receive_volume)
    vm = layout.element_volume
    pts_all, J_all = [], []
    for idx in blocks:
        c = layout.centroid(idx)
        for m in idx:
            pts = layout.centers[m] + off
            J = focusing_batch(params, c[None, :], pts - c, users[g[m]].position)[0] / np.sqrt(vm)
            pts_all.append(pts)
            J_all.append(J)
    pts = np.concatenate(pts_all)
    J = np.concatenate(J_all)
    ww = np.tile(w, len(layout))
    return budget.illumination * _received(params, pts, ww, J, p, rx_samples)


__all__ = ["brute_force_ps", "brute_force_grouped"]
