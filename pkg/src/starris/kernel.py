"""Hermitian coupling kernel between a source volume and a receiver volume.

The kernel ``K(s1, s2) = int_R conj(G(r, s1)) G(r, s2) dV`` is sampled on
midpoint quadrature grids.  Its discretisation is a Gram matrix, so the
dominant eigenpair gives the best achievable single-stream gain and the
eigenvalue spread gives the number of usable spatial modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .core_em import BoxVolume, Point3, SignalParams, focusing_phase, green_matrix, to_local
from .errors import ConvergenceFailure, InvalidParameter, ParaxialDomainViolation, SingularPoint

DENSE_EIGEN_LIMIT = 2048
DEFAULT_DOF_THRESHOLD = 0.01
PARAXIAL_MIN_RATIO = 5.0


@dataclass(frozen=True)
class QuadratureGrid:
    """Sample points and positive weights discretising a box volume.

    ``points`` is an (n, 3) array and ``weights`` an (n,) array in m^3.
    """

    points: np.ndarray
    weights: np.ndarray
    source_volume: BoxVolume
    shape: tuple = field(default=())

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if pts.shape[1] != 3 or pts.shape[0] != w.size or w.size == 0:
            raise InvalidParameter("grid needs matching non-empty points (n, 3) and weights (n,)")
        if np.any(w <= 0):
            raise InvalidParameter("quadrature weights must be positive")
        vol = self.source_volume.volume()
        if abs(w.sum() - vol) > 1e-9 * vol:
            raise InvalidParameter("weights do not sum to the volume")
        c = np.asarray(self.source_volume.center)
        half = np.asarray(self.source_volume.extents) / 2
        if np.any(np.abs(pts - c) > half * (1 + 1e-12) + 1e-15):
            raise InvalidParameter("grid point outside its volume")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.weights.size


def axis_counts(volume: BoxVolume, wavelength: float, samples_per_wavelength: float = 4.0,
                min_per_axis: int = 1) -> tuple:
    """Per-axis sample counts giving at least ``samples_per_wavelength`` per wavelength."""
    if not samples_per_wavelength > 0:
        raise InvalidParameter("samples_per_wavelength must be positive")
    return tuple(max(int(min_per_axis), math.ceil(e * samples_per_wavelength / wavelength - 1e-9))
                 for e in volume.extents)


def midpoint_grid(volume: BoxVolume, counts) -> QuadratureGrid:
    """Uniform midpoint grid with ``counts = (nx, ny, nz)`` cells."""
    counts = tuple(int(n) for n in counts)
    if len(counts) != 3 or min(counts) < 1:
        raise InvalidParameter(f"bad grid counts {counts}")
    axes = []
    for c, e, n in zip(volume.center, volume.extents, counts):
        h = e / n
        axes.append(c - e / 2 + h * (np.arange(n) + 0.5))
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
    w = np.full(pts.shape[0], volume.volume() / pts.shape[0])
    return QuadratureGrid(pts, w, volume, counts)


def wavelength_grid(volume: BoxVolume, wavelength: float, samples_per_wavelength: float = 4.0,
                    min_per_axis: int = 1) -> QuadratureGrid:
    """Midpoint grid whose density is tied to the wavelength."""
    return midpoint_grid(volume, axis_counts(volume, wavelength, samples_per_wavelength, min_per_axis))


@dataclass(frozen=True)
class KernelMatrix:
    entries: np.ndarray
    grid: QuadratureGrid
    receiver: BoxVolume
    _eig: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise InvalidParameter("kernel matrix must be square")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def eigenvalues(self) -> np.ndarray:
        """All eigenvalues in descending order (cached)."""
        if "vals" not in self._eig:
            if self.size == 0:
                raise InvalidParameter("empty kernel matrix")
            self._eig["vals"] = scipy.linalg.eigvalsh(self.entries)[::-1]
        return self._eig["vals"]


def _check_outside(receiver: BoxVolume, pts: np.ndarray):
    c = np.asarray(receiver.center)
    half = np.asarray(receiver.extents) / 2
    inside = np.all(np.abs(np.atleast_2d(pts) - c) <= half, axis=1)
    if np.any(inside):
        raise SingularPoint("source point inside the receiver volume")


def kernel_exact(params: SignalParams, src1, src2, receiver: BoxVolume,
                 rx_grid: QuadratureGrid) -> complex:
    """Quadrature estimate of ``sum_m w_m conj(G(r_m, src1)) G(r_m, src2)``."""
    s = np.array([tuple(src1), tuple(src2)], dtype=float)
    _check_outside(receiver, s)
    G = green_matrix(params, rx_grid.points, s)
    return complex(np.sum(rx_grid.weights * np.conj(G[:, 0]) * G[:, 1]))


def kernel_paraxial(params: SignalParams, src1, src2, subvolume_center, receiver: BoxVolume,
                    subvolume_extent: Optional[float] = None, enforce: bool = True) -> complex:
    """Paraxial kernel ``|beta|^2 F(s1) conj(F(s2)) V_R / (4 pi r)^2``.

    ``src1`` and ``src2`` are global points; they are mapped into the frame at
    ``subvolume_center`` looking at the receiver centre.  The distance must be
    at least five times the larger of the receiver extent and
    ``subvolume_extent`` unless ``enforce`` is False.
    """
    c = np.asarray(tuple(subvolume_center), dtype=float)
    rc = np.asarray(receiver.center)
    r = float(np.linalg.norm(rc - c))
    ext = receiver.max_extent
    if subvolume_extent is not None:
        ext = max(ext, subvolume_extent)
    if enforce and r < PARAXIAL_MIN_RATIO * ext:
        raise ParaxialDomainViolation(f"distance {r:.4g} m is under {PARAXIAL_MIN_RATIO} x extent {ext:.4g} m")
    loc = to_local(c, rc, np.array([tuple(src1), tuple(src2)], dtype=float))
    F = focusing_phase(params, loc, r)
    return complex(params.beta_sq * F[0] * np.conj(F[1]) * receiver.volume() / (4 * math.pi * r) ** 2)


def propagation_matrix(params: SignalParams, tx_grid: QuadratureGrid, rx_grid: QuadratureGrid) -> np.ndarray:
    """``A[m, i] = sqrt(w_m) G(r_m, s_i) sqrt(w_i)`` so that the kernel matrix is ``A^H A``."""
    G = green_matrix(params, rx_grid.points, tx_grid.points)
    return np.sqrt(rx_grid.weights)[:, None] * G * np.sqrt(tx_grid.weights)[None, :]


def build_kernel_matrix(params: SignalParams, tx_grid: QuadratureGrid, receiver: BoxVolume,
                        rx_grid: QuadratureGrid) -> KernelMatrix:
    """Weighted kernel matrix ``M_ij = sqrt(w_i w_j) K(s_i, s_j)``, symmetrised."""
    if tx_grid.source_volume.overlaps(receiver):
        raise SingularPoint("transmit and receive volumes overlap")
    _check_outside(receiver, tx_grid.points)
    A = propagation_matrix(params, tx_grid, rx_grid)
    M = A.conj().T @ A
    M = 0.5 * (M + M.conj().T)
    return KernelMatrix(M, tx_grid, receiver)


def effective_dof(matrix: KernelMatrix, threshold_ratio: float = DEFAULT_DOF_THRESHOLD) -> int:
    """Number of eigenvalues at or above ``threshold_ratio`` times the largest."""
    if matrix.size == 0:
        raise InvalidParameter("empty kernel matrix")
    if not 0 < threshold_ratio < 1:
        raise InvalidParameter("threshold_ratio must be in (0, 1)")
    vals = matrix.eigenvalues()
    lmax = vals[0]
    if lmax <= 0:
        raise InvalidParameter("kernel matrix has no positive eigenvalue")
    return int(np.count_nonzero(vals >= threshold_ratio * lmax))


def dominant_eigenpair(matrix: KernelMatrix, max_iter: Optional[int] = None):
    """Largest eigenvalue and its unit-norm eigenvector.

    Dense Hermitian solve up to ``DENSE_EIGEN_LIMIT`` rows, Lanczos above.
    The eigenvector is phase-normalised so its first non-negligible entry is
    real and positive.
    """
    n = matrix.size
    if n == 0:
        raise InvalidParameter("empty kernel matrix")
    M = matrix.entries
    if n <= DENSE_EIGEN_LIMIT:
        vals, vecs = scipy.linalg.eigh(M, subset_by_index=[n - 1, n - 1])
        lam, v = float(vals[0]), vecs[:, 0]
    else:
        try:
            vals, vecs = eigsh(M, k=1, which="LA", maxiter=max_iter, tol=1e-12)
        except ArpackNoConvergence as exc:
            raise ConvergenceFailure(str(exc)) from exc
        lam, v = float(vals[0]), vecs[:, 0]
    v = v / np.linalg.norm(v)
    ref = np.argmax(np.abs(v) > 1e-6 * np.abs(v).max())
    v = v * np.exp(-1j * np.angle(v[ref]))
    return max(lam, 0.0), v


def received_field(params: SignalParams, tx_grid: QuadratureGrid, currents, rx_points) -> np.ndarray:
    """Field ``E(r) = sum_i w_i G(r, s_i) J_i`` at ``rx_points``."""
    J = np.asarray(currents, dtype=complex).ravel()
    G = green_matrix(params, rx_points, tx_grid.points)
    return G @ (tx_grid.weights * J)


def received_power(params: SignalParams, tx_grid: QuadratureGrid, currents, rx_grid: QuadratureGrid) -> float:
    """``int_R |E|^2 dV`` for currents sampled on ``tx_grid``."""
    E = received_field(params, tx_grid, currents, rx_grid.points)
    return float(np.sum(rx_grid.weights * np.abs(E) ** 2))


def focusing_currents(params: SignalParams, tx_grid: QuadratureGrid, center, target,
                      distance: Optional[float] = None) -> np.ndarray:
    """Focusing current ``F`` sampled on ``tx_grid``, frame at ``center`` aimed at ``target``."""
    c = np.asarray(tuple(center), dtype=float)
    t = np.asarray(tuple(target), dtype=float)
    r = float(np.linalg.norm(t - c)) if distance is None else distance
    return focusing_phase(params, to_local(c, t, tx_grid.points), r)


def unit_norm_currents(tx_grid: QuadratureGrid, currents) -> np.ndarray:
    """Scale currents so that ``sum_i w_i |J_i|^2 = 1``."""
    J = np.asarray(currents, dtype=complex)
    return J / math.sqrt(float(np.sum(tx_grid.weights * np.abs(J) ** 2)))


def currents_from_eigenvector(tx_grid: QuadratureGrid, vec) -> np.ndarray:
    """Convert an eigenvector of the weighted matrix into a current density with unit energy."""
    return np.asarray(vec, dtype=complex) / np.sqrt(tx_grid.weights)


__all__ = [
    "QuadratureGrid", "KernelMatrix", "axis_counts", "midpoint_grid", "wavelength_grid",
    "kernel_exact", "kernel_paraxial", "propagation_matrix", "build_kernel_matrix",
    "effective_dof", "dominant_eigenpair", "received_field", "received_power",
    "focusing_currents", "unit_norm_currents", "currents_from_eigenvector",
    "DEFAULT_DOF_THRESHOLD", "DENSE_EIGEN_LIMIT", "Point3",
]
