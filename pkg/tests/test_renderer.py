import numpy as np
import pytest
from scipy.special import expit

from pointrefine.data_io.synthetic import coarse_logits_from_mask, image_features
from pointrefine.errors import InvalidInputError
from pointrefine.grid import upsample2x
from pointrefine.pipeline import fit_head
from pointrefine.point_head import TrainConfig, init_params
from pointrefine.renderer import RenderConfig, RenderTrace, binarize, refine
from pointrefine.sampling import select_top_uncertain, uncertainty_from_logits


def random_inputs(seed=0, coarse=(4, 5), fine=(32, 40)):
    rng = np.random.default_rng(seed)
    return rng.normal(size=coarse) * 3, rng.normal(size=(*fine, 3))


def iterated_upsample(g, steps):
    for _ in range(steps):
        g = upsample2x(g)
    return g


def test_no_points_is_pure_upsampling():
    coarse, feats = random_inputs()
    head = init_params(4, seed=1)
    out = refine(coarse, feats, head, RenderConfig(3, 0))
    assert out.tobytes() == iterated_upsample(coarse, 3).tobytes()


def test_output_shape():
    coarse, feats = random_inputs(coarse=(3, 7))
    assert refine(coarse, feats, init_params(4), RenderConfig(2, 5)).shape == (12, 28)


def test_zero_head_writes_zero_at_selected_cells_only():
    coarse, feats = random_inputs(2)
    p = init_params(4, seed=0)
    zero = p.with_flat(np.zeros_like(p.flat()))
    out = refine(coarse, feats, zero, RenderConfig(1, 6))
    base = upsample2x(coarse)
    chosen = np.zeros(base.size, dtype=bool)
    pts = select_top_uncertain(uncertainty_from_logits(base), 6)
    rows = np.floor(pts[:, 1] * base.shape[0]).astype(int)
    cols = np.floor(pts[:, 0] * base.shape[1]).astype(int)
    chosen[rows * base.shape[1] + cols] = True
    flat_out, flat_base = out.ravel(), base.ravel()
    assert np.all(flat_out[chosen] == 0.0)
    np.testing.assert_array_equal(flat_out[~chosen], flat_base[~chosen])


def test_work_bound_counts_head_calls():
    coarse, feats = random_inputs(3, coarse=(8, 8), fine=(64, 64))
    trace = RenderTrace()
    refine(coarse, feats, init_params(4, seed=2), RenderConfig(3, 50), trace)
    assert trace.head_evaluations == 3 * 50
    assert [len(p) for p in trace.points] == [50, 50, 50]


def test_points_are_distinct_within_step():
    coarse, feats = random_inputs(4)
    trace = RenderTrace()
    refine(coarse, feats, init_params(4, seed=2), RenderConfig(3, 30), trace)
    for pts in trace.points:
        assert len({tuple(p) for p in pts}) == len(pts)


def test_default_points_per_step():
    cfg = RenderConfig(5)
    assert cfg.points_for((7, 7)) == 224 * 224 // 16


def test_deterministic():
    coarse, feats = random_inputs(5)
    head = init_params(4, seed=9)
    a = refine(coarse, feats, head, RenderConfig(3, 40))
    b = refine(coarse, feats, head, RenderConfig(3, 40))
    assert a.tobytes() == b.tobytes()


def test_rejects_incompatible_inputs():
    coarse, feats = random_inputs()
    with pytest.raises(InvalidInputError):
        refine(coarse, feats, init_params(5), RenderConfig(2, 4))
    with pytest.raises(InvalidInputError):
        refine(coarse, feats, init_params(4), RenderConfig(1, 10_000))
    with pytest.raises(InvalidInputError):
        refine(np.zeros((4, 5, 2)), feats, init_params(4), RenderConfig(1, 4))


def test_binarize_conventions():
    assert not binarize(np.full((3, 3), -1.0)).any()
    assert binarize(np.zeros((1, 1)))[0, 0]


@pytest.mark.parametrize("threshold", [0.5, 0.2, 0.73])
def test_binarize_matches_sigmoid_oracle(threshold):
    g = np.random.default_rng(6).normal(size=(9, 11)) * 4
    want = np.array([[expit(v) >= threshold for v in row] for row in g])
    np.testing.assert_array_equal(binarize(g, threshold), want)


def half_plane(size, angle, offset):
    yy, xx = np.mgrid[0:size, 0:size] + 0.5
    return (np.cos(angle) * (xx - size / 2) + np.sin(angle) * (yy - size / 2)) > offset


def half_plane_sample(size, angle, offset, rng):
    mask = half_plane(size, angle, offset)
    image = np.where(mask, 0.8, 0.2) + rng.normal(0, 0.03, mask.shape)
    image = np.round(np.clip(image, 0, 1) * 255).astype(np.uint8)
    return coarse_logits_from_mask(mask, 3), image_features(image), mask


def test_trained_head_beats_upsampling_near_the_boundary():
    rng = np.random.default_rng(0)
    train_set = [half_plane_sample(64, rng.uniform(0, 2 * np.pi), rng.uniform(-12, 12), rng)
                 for _ in range(12)]
    render = RenderConfig(3)
    head = fit_head(train_set, TrainConfig(0.1, 64, 1500, 0), render, num_points=256,
                    rollout_rounds=2, seed=0)

    coarse, feats, mask = half_plane_sample(64, 0.9, 3.0, rng)
    yy, xx = np.mgrid[0:64, 0:64] + 0.5
    dist = np.abs(np.cos(0.9) * (xx - 32) + np.sin(0.9) * (yy - 32) - 3.0)
    band = dist < 6
    baseline = iterated_upsample(coarse, 3) >= 0
    refined = binarize(refine(coarse, feats, head, render))
    assert np.sum(refined[band] != mask[band]) < np.sum(baseline[band] != mask[band])
