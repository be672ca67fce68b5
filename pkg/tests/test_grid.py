import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pointrefine.errors import InvalidInputError
from pointrefine.grid import bilinear_sample, cell_centers, scatter_points, upsample2x

G22 = np.array([[0.0, 1.0], [2.0, 3.0]])

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def grids(max_side=6, channels=None):
    shape = st.tuples(st.integers(1, max_side), st.integers(1, max_side),
                      st.just(channels) if channels else st.integers(1, 3))
    return shape.flatmap(lambda s: arrays(np.float64, s, elements=finite))


def manual_bilinear(g, x, y):
    """Direct evaluation of the four-neighbour formula on a 2D grid."""
    h, w = g.shape
    cx = min(max(x * w - 0.5, 0.0), w - 1)
    cy = min(max(y * h - 0.5, 0.0), h - 1)
    j0, i0 = int(np.floor(cx)), int(np.floor(cy))
    j1, i1 = min(j0 + 1, w - 1), min(i0 + 1, h - 1)
    fx, fy = cx - j0, cy - i0
    return ((1 - fx) * (1 - fy) * g[i0, j0] + fx * (1 - fy) * g[i0, j1]
            + (1 - fx) * fy * g[i1, j0] + fx * fy * g[i1, j1])


def test_constant_grid_samples_constant():
    g = np.full((5, 7), 3.0)
    pts = np.random.default_rng(0).random((50, 2))
    assert np.all(bilinear_sample(g, pts) == 3.0)


def test_center_of_2x2_is_average():
    assert bilinear_sample(G22, [[0.5, 0.5]])[0, 0] == 1.5


@pytest.mark.parametrize("point, expected", [
    ((0.75, 0.25), 1.0),   # exactly the center of cell (0, 1)
    ((0.6, 0.4), 1.3),     # cx = 0.7, cy = 0.3: 0.7 + 0.3 * 2
    ((0.0, 0.0), 0.0),     # clamped to corner cell
    ((1.0, 1.0), 3.0),
    ((1.0, 0.5), 2.0),     # right border, halfway between rows: (1 + 3) / 2
])
def test_bilinear_hand_values(point, expected):
    assert bilinear_sample(G22, [point])[0, 0] == pytest.approx(expected, abs=1e-15)


def test_bilinear_matches_manual_formula():
    rng = np.random.default_rng(1)
    g = rng.normal(size=(6, 9))
    pts = rng.random((200, 2))
    got = bilinear_sample(g, pts)[:, 0]
    want = [manual_bilinear(g, x, y) for x, y in pts]
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)


def test_non_finite_point_rejected():
    with pytest.raises(InvalidInputError):
        bilinear_sample(G22, [[np.nan, 0.5]])
    with pytest.raises(InvalidInputError):
        bilinear_sample(G22, [[1.5, 0.5]])


def test_upsample_1x1():
    assert np.array_equal(upsample2x([[4.5]]), np.full((2, 2), 4.5))


def test_upsample_constant():
    out = upsample2x(np.full((3, 5, 2), -1.25))
    assert out.shape == (6, 10, 2)
    assert np.all(out == -1.25)


def test_upsample_2x2_hand_values():
    cols = np.array([0.0, 0.25, 0.75, 1.0])
    rows = np.array([0.0, 0.5, 1.5, 2.0])
    np.testing.assert_array_equal(upsample2x(G22), rows[:, None] + cols[None, :])


def test_upsample_equals_sampling_at_output_centers():
    g = np.random.default_rng(2).normal(size=(5, 3, 2))
    out = upsample2x(g)
    pts = cell_centers(10, 6)
    np.testing.assert_allclose(out.reshape(-1, 2), bilinear_sample(g, pts), rtol=1e-12, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(grids())
def test_sampling_cell_centers_is_exact(g):
    h, w, c = g.shape
    np.testing.assert_array_equal(bilinear_sample(g, cell_centers(h, w)), g.reshape(-1, c))


@settings(max_examples=60, deadline=None)
@given(grids(channels=1), st.data())
def test_upsample_linear(g1, data):
    g2 = data.draw(arrays(np.float64, g1.shape, elements=finite))
    a, b = data.draw(finite), data.draw(finite)
    lhs = upsample2x(a * g1 + b * g2)
    rhs = a * upsample2x(g1) + b * upsample2x(g2)
    scale = max(1.0, np.max(np.abs(a * g1)) + np.max(np.abs(b * g2)))
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale


@settings(max_examples=80, deadline=None)
@given(grids())
def test_upsample_within_bounds(g):
    out = upsample2x(g)
    assert out.min() >= g.min() and out.max() <= g.max()


def test_scatter_empty_is_noop():
    g = np.arange(12.0).reshape(3, 4)
    np.testing.assert_array_equal(scatter_points(g, np.zeros((0, 2)), []), g)


def test_scatter_exact_center():
    out = scatter_points(np.zeros((4, 4)), [[0.125, 0.125]], [7.0])
    expected = np.zeros((4, 4))
    expected[0, 0] = 7.0
    np.testing.assert_array_equal(out, expected)


def test_scatter_tie_goes_to_smaller_index():
    # x = 0.5 on a 4-wide grid is the boundary between columns 1 and 2.
    out = scatter_points(np.zeros((4, 4)), [[0.5, 0.125]], [1.0])
    assert out[0, 1] == 1.0 and out.sum() == 1.0
    out = scatter_points(np.zeros((4, 4)), [[0.125, 0.5]], [1.0])
    assert out[1, 0] == 1.0 and out.sum() == 1.0


def test_scatter_length_mismatch():
    with pytest.raises(InvalidInputError):
        scatter_points(np.zeros((2, 2)), [[0.25, 0.25]], [1.0, 2.0])


@settings(max_examples=60, deadline=None)
@given(grids(channels=1), st.data())
def test_scatter_then_sample_roundtrip(g, data):
    h, w, _ = g.shape
    n = data.draw(st.integers(1, h * w))
    idx = data.draw(st.permutations(range(h * w)))[:n]
    rows, cols = np.divmod(np.array(idx), w)
    pts = cell_centers(h, w, rows, cols)
    vals = data.draw(arrays(np.float64, (n,), elements=finite))
    out = scatter_points(g, pts, vals)
    np.testing.assert_array_equal(bilinear_sample(out, pts)[:, 0], vals)
