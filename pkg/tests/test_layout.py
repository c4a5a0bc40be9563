import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from starris.errors import InvalidParameter
from starris.layout import ElementMode, RisLayout, rect_layout, split_blocks, square_layout


@given(st.integers(1, 60), st.floats(0.001, 0.2))
def test_square_layout_is_centred_and_gapless(M, a):
    lay = square_layout(M, a, a / 4)
    assert len(lay) == M
    box = lay.bounding_box()
    assert np.allclose(box.center, 0.0, atol=1e-12)
    # neighbouring elements share an edge
    d = np.linalg.norm(lay.centers[:, None, :] - lay.centers[None, :, :], axis=2)
    if M > 1:
        assert np.min(d[d > 0]) == pytest.approx(a)
    assert box.extent_z == pytest.approx(a / 4)


def test_square_layout_rows():
    lay = square_layout(5, 0.1, 0.01)
    # three columns, two rows, last row partial
    assert sorted(set(lay.grid_index[:, 0])) == [0, 1, 2]
    assert sorted(set(lay.grid_index[:, 1])) == [0, 1]
    assert lay.bounding_box().extent_x == pytest.approx(0.3)
    assert lay.bounding_box().extent_y == pytest.approx(0.2)


def test_rect_layout_fills_aperture():
    lay = rect_layout(0.2, 0.1, 0.01, 0.01, 0.005, center=(1.0, 2.0, 0.0))
    assert len(lay) == 200
    box = lay.bounding_box()
    assert box.extents == pytest.approx((0.2, 0.1, 0.005))
    assert box.center == pytest.approx((1.0, 2.0, 0.0))
    assert lay.element_volume == pytest.approx(0.01 * 0.01 * 0.005)


def test_layout_validation():
    with pytest.raises(InvalidParameter):
        square_layout(0, 0.1, 0.01)
    with pytest.raises(InvalidParameter):
        RisLayout(np.zeros((2, 3)), (0.1, 0.1, 0.0), np.zeros((2, 2), int))
    with pytest.raises(InvalidParameter):
        RisLayout(np.zeros((2, 3)), (0.1, 0.1, 0.1), np.zeros((2, 2), int), modes=("star",))


def test_layout_modes_and_translation():
    lay = square_layout(4, 0.1, 0.01)
    assert all(m is ElementMode.STAR for m in lay.modes)
    moved = lay.translated((0, 0, 1.0))
    assert np.allclose(moved.centers[:, 2], 1.0)
    assert np.allclose(moved.centroid(), (0, 0, 1.0))


def test_split_blocks_partitions_elements():
    blocks = [np.array([0, 1, 2]), np.array([3, 4])]
    labels = [0, 1, 0, 1, 1]
    out = split_blocks(blocks, labels, 2)
    assert [(b, g, list(i)) for b, g, i in out] == [(0, 0, [0, 2]), (0, 1, [1]), (1, 1, [3, 4])]
    covered = np.sort(np.concatenate([i for _, _, i in out]))
    assert list(covered) == [0, 1, 2, 3, 4]
