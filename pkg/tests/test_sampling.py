import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.special import expit

from pointrefine.errors import InvalidInputError
from pointrefine.grid import bilinear_sample, cell_centers
from pointrefine.sampling import (TrainSamplerConfig, sample_training_points,
                                  select_top_uncertain, top_uncertain_cells,
                                  uncertainty_from_logits)


def test_zero_logit_is_most_uncertain():
    u = uncertainty_from_logits(np.array([[0.0, 1.0, -2.0]]))
    assert u[0, 0] == 0.0 and u.max() == 0.0


def test_symmetric_logits():
    np.testing.assert_array_equal(uncertainty_from_logits([[-3.0, 3.0]]), [[-3.0, -3.0]])


def test_multiclass_margin():
    u = uncertainty_from_logits(np.array([[[2.0, 1.5]]]))
    assert u[0, 0] == pytest.approx(-0.5)
    u = uncertainty_from_logits(np.array([[[0.1, 2.0, 1.5]]]))
    assert u[0, 0] == pytest.approx(-0.5)


def test_uniform_map_takes_first_cells():
    pts = select_top_uncertain(np.zeros((3, 4)), 3)
    np.testing.assert_array_equal(pts, cell_centers(3, 4)[:3])


def test_select_all():
    pts = select_top_uncertain(np.random.default_rng(0).normal(size=(3, 5)), 15)
    assert sorted(map(tuple, pts)) == sorted(map(tuple, cell_centers(3, 5)))


def test_select_too_many():
    with pytest.raises(InvalidInputError):
        select_top_uncertain(np.zeros((2, 2)), 5)


def test_select_matches_full_sort():
    u = np.random.default_rng(3).normal(size=(8, 8))
    cells = sorted(((-u[i, j], i, j) for i in range(8) for j in range(8)))[:5]
    want = [((j + 0.5) / 8, (i + 0.5) / 8) for _, i, j in cells]
    np.testing.assert_array_equal(select_top_uncertain(u, 5), want)


umaps = st.tuples(st.integers(1, 6), st.integers(1, 6)).flatmap(
    lambda s: arrays(np.float64, s, elements=st.integers(-5, 5).map(float)))


@settings(max_examples=100, deadline=None)
@given(umaps, st.data())
def test_selection_separates(u, data):
    n = data.draw(st.integers(1, u.size))
    idx = top_uncertain_cells(u, n)
    assert len(idx) == n
    chosen = np.zeros(u.size, dtype=bool)
    chosen[idx] = True
    if n < u.size:
        assert u.ravel()[chosen].min() >= u.ravel()[~chosen].max()


@settings(max_examples=100, deadline=None)
@given(umaps, st.integers(-100, 100), st.data())
def test_selection_shift_invariant(u, c, data):
    n = data.draw(st.integers(1, u.size))
    np.testing.assert_array_equal(select_top_uncertain(u, n), select_top_uncertain(u + c, n))


@settings(max_examples=100, deadline=None)
@given(st.tuples(st.integers(1, 6), st.integers(1, 6)).flatmap(
    lambda s: arrays(np.float64, s, elements=st.integers(-64, 64).map(lambda k: k / 8))),
    st.data())
def test_abs_logit_and_probability_margin_select_same_cells(logits, data):
    n = data.draw(st.integers(1, logits.size))
    by_logit = set(top_uncertain_cells(uncertainty_from_logits(logits), n).tolist())
    by_prob = set(top_uncertain_cells(-np.abs(expit(logits) - 0.5), n).tolist())
    # Sigmoid is strictly monotone (and injective in float64 on this lattice),
    # so the sets can only differ among exact ties.
    u = -np.abs(logits).ravel()
    boundary = np.sort(u)[::-1][n - 1]
    assert {i for i in by_logit if u[i] != boundary} == {i for i in by_prob if u[i] != boundary}


def test_beta_zero_never_consults_uncertainty():
    def u_eval(_):
        raise AssertionError("should not be called")

    pts = sample_training_points(u_eval, TrainSamplerConfig(10, 3.0, 0.0, rng_seed=4))
    assert pts.shape == (10, 2)
    assert np.all((pts >= 0) & (pts <= 1))


def test_beta_one_k_one_keeps_draws():
    seen = []

    def u_eval(p):
        seen.append(p.copy())
        return -p[:, 0]

    pts = sample_training_points(u_eval, TrainSamplerConfig(8, 1.0, 1.0, rng_seed=5))
    np.testing.assert_array_equal(pts, seen[0])


def test_importance_points_are_top_candidates():
    seen = []

    def u_eval(p):
        seen.append(p.copy())
        return -np.abs(p[:, 0] - 0.3)

    cfg = TrainSamplerConfig(8, 3.0, 0.75, rng_seed=6)
    pts = sample_training_points(u_eval, cfg)
    cand = seen[0]
    assert cand.shape == (24, 2)
    ranked = sorted(range(24), key=lambda i: abs(cand[i, 0] - 0.3))[:6]
    assert {tuple(cand[i]) for i in ranked} == {tuple(p) for p in pts[:6]}
    assert not any(tuple(p) in {tuple(c) for c in cand} for p in pts[6:])


def test_seed_determinism():
    cfg = TrainSamplerConfig(50, 3.0, 0.75, rng_seed=123)

    def u_eval(p):
        return -np.abs(p[:, 1] - 0.5)

    a = sample_training_points(u_eval, cfg)
    b = sample_training_points(u_eval, cfg)
    assert a.shape == (50, 2)
    assert a.tobytes() == b.tobytes()


def test_bias_moves_points_towards_boundary():
    # Half-plane with the boundary at x = 0.4, encoded as a coarse logit grid.
    xs = (np.arange(16) + 0.5) / 16
    logits = np.tile(8.0 * (xs - 0.4), (16, 1))

    def u_eval(p):
        return -np.abs(bilinear_sample(logits, p)[:, 0])

    def mean_distance(beta):
        d = [np.abs(sample_training_points(u_eval, TrainSamplerConfig(64, 3.0, beta, seed))[:, 0]
                    - 0.4).mean() for seed in range(120)]
        return np.mean(d)

    distances = [mean_distance(b) for b in (0.0, 0.25, 0.5, 0.75, 1.0)]
    assert all(a >= b for a, b in zip(distances, distances[1:]))
    assert distances[-1] < distances[0]
