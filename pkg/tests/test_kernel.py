import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from starris.core_em import BoxVolume, Point3, SignalParams, green_yy
from starris.errors import InvalidParameter, ParaxialDomainViolation, SingularPoint
from starris.kernel import (KernelMatrix, QuadratureGrid, axis_counts, build_kernel_matrix, dominant_eigenpair,
                            effective_dof, focusing_currents, kernel_exact, kernel_paraxial, midpoint_grid,
                            received_power, unit_norm_currents, wavelength_grid, currents_from_eigenvector)
from starris.regions import analytic_dof

LAM = 0.01
P = SignalParams.from_wavelength(LAM)


def _point_receiver(center, vol=1e-6):
    side = vol ** (1 / 3)
    box = BoxVolume.centered((side, side, side), center)
    return box, midpoint_grid(box, (1, 1, 1))


def test_midpoint_grid_integrates_quadratic():
    box = BoxVolume.centered((0.2, 0.1, 0.05), (0.1, 0, 0))
    g = midpoint_grid(box, (40, 20, 10))
    assert g.weights.sum() == pytest.approx(box.volume())
    # int x^2 over the box, exact = V * (c^2 + a^2/12)
    exact = box.volume() * (0.1**2 + 0.2**2 / 12)
    assert np.sum(g.weights * g.points[:, 0] ** 2) == pytest.approx(exact, rel=1e-3)


def test_axis_counts_follow_wavelength():
    box = BoxVolume.centered((0.05, 0.02, 0.0025))
    assert axis_counts(box, LAM, 4) == (20, 8, 1)
    assert axis_counts(box, LAM, 4, min_per_axis=2) == (20, 8, 2)


def test_grid_rejects_points_outside():
    box = BoxVolume.centered((1, 1, 1))
    with pytest.raises(InvalidParameter):
        QuadratureGrid(np.array([[2.0, 0, 0]]), np.array([1.0]), box)


def test_kernel_exact_diagonal_is_energy():
    rx = BoxVolume.centered((0.02, 0.02, 0.01), (0, 0, 0.5))
    g = midpoint_grid(rx, (4, 4, 2))
    s = (0.01, 0, 0)
    k = kernel_exact(P, s, s, rx, g)
    direct = sum(w * abs(green_yy(P, r, s)) ** 2 for r, w in zip(g.points, g.weights))
    assert k.imag == pytest.approx(0, abs=1e-12 * abs(k))
    assert k.real == pytest.approx(direct, rel=1e-12)


def test_kernel_exact_one_sample_receiver():
    d = 0.6
    rx, g = _point_receiver((0, 0, d))
    s1, s2 = (0, 0, 0), (0, 0, 0.003)
    k = kernel_exact(P, s1, s2, rx, g)
    expected = rx.volume() * np.conj(green_yy(P, (0, 0, d), s1)) * green_yy(P, (0, 0, d), s2)
    assert k == pytest.approx(expected, rel=1e-12)
    d1, d2 = d, d - 0.003
    closed = P.beta_sq * rx.volume() / (16 * math.pi**2 * d1 * d2) * np.exp(-1j * P.wavenumber * (d2 - d1))
    assert k == pytest.approx(closed, rel=1e-12)


def test_kernel_exact_source_inside_receiver():
    rx = BoxVolume.centered((0.1, 0.1, 0.1), (0, 0, 0))
    with pytest.raises(SingularPoint):
        kernel_exact(P, (0, 0, 0), (1, 0, 0), rx, midpoint_grid(rx, (2, 2, 2)))


def test_kernel_paraxial_at_centre():
    rx = BoxVolume.centered((0.02, 0.02, 0.01), (0, 0, 1.0))
    k = kernel_paraxial(P, (0, 0, 0), (0, 0, 0), (0, 0, 0), rx)
    assert k == pytest.approx(P.beta_sq * rx.volume() / (4 * math.pi) ** 2)


def test_kernel_paraxial_domain():
    rx = BoxVolume.centered((0.1, 0.1, 0.01), (0, 0, 0.3))
    with pytest.raises(ParaxialDomainViolation):
        kernel_paraxial(P, (0, 0, 0), (0, 0, 0), (0, 0, 0), rx)
    kernel_paraxial(P, (0, 0, 0), (0, 0, 0), (0, 0, 0), rx, enforce=False)


def test_kernel_paraxial_tracks_exact_in_far_field():
    rx = BoxVolume.centered((0.01, 0.01, 0.005), (0, 0, 1.0))
    g = midpoint_grid(rx, (6, 6, 3))
    s1, s2 = (0.001, 0.0, 0.0), (-0.001, 0.002, 0.001)
    ex = kernel_exact(P, s1, s2, rx, g)
    px = kernel_paraxial(P, s1, s2, (0, 0, 0), rx)
    assert abs(px - ex) / abs(ex) < 0.02


def test_one_by_one_kernel_matrix():
    tx = BoxVolume.centered((0.002, 0.002, 0.002))
    tg = midpoint_grid(tx, (1, 1, 1))
    rx = BoxVolume.centered((0.02, 0.02, 0.01), (0, 0, 0.5))
    rg = midpoint_grid(rx, (3, 3, 2))
    K = build_kernel_matrix(P, tg, rx, rg)
    assert K.size == 1
    expected = tg.weights[0] * kernel_exact(P, (0, 0, 0), (0, 0, 0), rx, rg)
    assert K.entries[0, 0] == pytest.approx(expected, rel=1e-12)


def test_kernel_matrix_overlap_raises():
    tx = BoxVolume.centered((0.1, 0.1, 0.1))
    with pytest.raises(SingularPoint):
        build_kernel_matrix(P, midpoint_grid(tx, (2, 2, 2)), tx.moved((0, 0, 0.05)),
                            midpoint_grid(tx.moved((0, 0, 0.05)), (2, 2, 2)))


def test_point_receiver_is_rank_one():
    tx = BoxVolume.centered((0.03, 0.03, 0.0025))
    tg = wavelength_grid(tx, LAM, 4)
    rx, rg = _point_receiver((0, 0, 0.3))
    K = build_kernel_matrix(P, tg, rx, rg)
    for thr in (0.5, 0.01, 1e-6):
        assert effective_dof(K, thr) == 1


def test_dominant_eigenpair_diagonal():
    tx = BoxVolume.centered((1, 1, 1))
    g = midpoint_grid(tx, (2, 1, 1))
    lam, v = dominant_eigenpair(KernelMatrix(np.diag([3.0, 1.0]), g, tx))
    assert lam == pytest.approx(3.0)
    assert np.allclose(v, [1, 0])


def test_effective_dof_validates():
    tx = BoxVolume.centered((1, 1, 1))
    K = KernelMatrix(np.diag([2.0, 1.0]), midpoint_grid(tx, (2, 1, 1)), tx)
    with pytest.raises(InvalidParameter):
        effective_dof(K, 1.5)
    assert effective_dof(K, 0.4) == 2
    assert effective_dof(K, 0.6) == 1


def test_far_field_configuration_has_one_mode():
    tx = BoxVolume.centered((0.04, 0.04, 0.0025))
    rx = BoxVolume.centered((0.05, 0.05, 0.01), (0, 0, 1.5))
    assert analytic_dof(P, tx, rx, 1.5) == 1
    K = build_kernel_matrix(P, wavelength_grid(tx, LAM, 4), rx, wavelength_grid(rx, LAM, 4))
    assert effective_dof(K, 0.01) == 1


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_rayleigh_quotient_bounded_by_lambda_max(seed):
    tx = BoxVolume.centered((0.03, 0.03, 0.0025))
    rx = BoxVolume.centered((0.03, 0.03, 0.005), (0, 0, 0.3))
    K = build_kernel_matrix(P, wavelength_grid(tx, LAM, 4), rx, wavelength_grid(rx, LAM, 4))
    lam, _ = dominant_eigenpair(K)
    rng = np.random.default_rng(seed)
    v = rng.normal(size=K.size) + 1j * rng.normal(size=K.size)
    v /= np.linalg.norm(v)
    assert np.real(v.conj() @ K.entries @ v) <= lam * (1 + 1e-10)


def test_eigenvector_currents_reach_lambda_max():
    tx = BoxVolume.centered((0.03, 0.03, 0.0025))
    rx = BoxVolume.centered((0.03, 0.03, 0.005), (0, 0, 0.3))
    tg = wavelength_grid(tx, LAM, 4)
    rg = wavelength_grid(rx, LAM, 4)
    lam, v = dominant_eigenpair(build_kernel_matrix(P, tg, rx, rg))
    J = currents_from_eigenvector(tg, v)
    assert np.sum(tg.weights * np.abs(J) ** 2) == pytest.approx(1.0)
    assert received_power(P, tg, J, rg) == pytest.approx(lam, rel=1e-9)
    F = unit_norm_currents(tg, focusing_currents(P, tg, (0, 0, 0), rx.center))
    assert received_power(P, tg, F, rg) <= lam * (1 + 1e-10)
