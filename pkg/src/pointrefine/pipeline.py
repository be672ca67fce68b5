"""Glue between the synthetic data, the point head and the renderer."""

import numpy as np

from .grid import bilinear_sample, nearest_cells
from .mask_geometry import MaskInstance, mask_iou, rle_encode
from .point_head import init_params, train
from .renderer import RenderTrace, binarize, refine
from .sampling import TrainSamplerConfig, sample_training_points

__all__ = ["point_features", "point_training_set", "rollout_training_set", "train_head",
           "fit_head", "refine_sample", "refine_samples", "mask_ious"]


def point_features(coarse_logits, features, points):
    """Rows of ``[coarse logit, fine features...]`` sampled at ``points``."""
    return np.concatenate([bilinear_sample(coarse_logits, points),
                           bilinear_sample(features, points)], axis=1)


def point_training_set(samples, num_points=196, oversample_factor=3.0,
                       importance_ratio=0.75, seed=0):
    """Border-biased training points for every sample, labelled from its mask.

    ``samples`` yield ``(coarse_logits, features, mask)`` triples; sample ``i``
    uses sampler seed ``(seed, i)``.
    """
    xs, ys = [], []
    for i, (coarse, feats, mask) in enumerate(samples):
        cfg = TrainSamplerConfig(num_points, oversample_factor, importance_ratio,
                                 rng_seed=np.random.SeedSequence([seed, i]).generate_state(1)[0])

        def u_eval(pts, coarse=coarse):
            return -np.abs(bilinear_sample(coarse, pts)[:, 0])

        pts = sample_training_points(u_eval, cfg)
        rows, cols = nearest_cells(mask.shape[0], mask.shape[1], pts)
        xs.append(point_features(coarse, feats, pts))
        ys.append(np.asarray(mask, dtype=bool)[rows, cols].astype(np.float64))
    if not xs:
        return np.zeros((0, 0)), np.zeros(0)
    return np.concatenate(xs), np.concatenate(ys)


def rollout_training_set(samples, head, render_cfg, max_points=None, seed=0):
    """Point features the head actually receives while refining ``samples``.

    After the first step the coarse entry is read from the partially refined
    grid, whose logits are the head's own and can be far larger than those of
    the original coarse mask.  Labelling these queries from the true mask
    gives training data that matches inference.  ``max_points`` caps the
    queries kept per sample (drawn without replacement, seed ``(seed, i)``).
    """
    xs, ys = [], []
    for i, (coarse, feats, mask) in enumerate(samples):
        trace = RenderTrace()
        refine(coarse, feats, head, render_cfg, trace)
        mask = np.asarray(mask, dtype=bool)
        if not trace.points:
            continue
        pts = np.concatenate(trace.points)
        f = np.concatenate(trace.features)
        if max_points is not None and len(pts) > max_points:
            keep = np.sort(np.random.default_rng([seed, i]).choice(len(pts), max_points,
                                                                   replace=False))
            pts, f = pts[keep], f[keep]
        rows, cols = nearest_cells(mask.shape[0], mask.shape[1], pts)
        xs.append(f)
        ys.append(mask[rows, cols].astype(np.float64))
    if not xs:
        return np.zeros((0, 0)), np.zeros(0)
    return np.concatenate(xs), np.concatenate(ys)


def train_head(x, y, train_cfg, hidden=(64, 64, 64), init_seed=0, on_step=None):
    params = init_params(x.shape[1], hidden, seed=init_seed)
    return train(params, x, y, train_cfg, on_step=on_step)


def fit_head(samples, train_cfg, render_cfg, hidden=(64, 64, 64), num_points=196,
             oversample_factor=3.0, importance_ratio=0.75, rollout_rounds=1, seed=0,
             on_step=None):
    """Train a point head on ``(coarse, features, mask)`` samples.

    A first round uses border-biased points on the coarse masks; each
    rollout round then adds the queries made while refining the samples with
    the current head and continues training on the union.  ``on_step``
    receives ``(round, step, params, loss)``.
    """
    samples = list(samples)
    x, y = point_training_set(samples, num_points, oversample_factor, importance_ratio, seed)
    head = init_params(x.shape[1], hidden, seed=seed)
    for rnd in range(rollout_rounds + 1):
        if rnd > 0:
            xr, yr = rollout_training_set(samples, head, render_cfg, num_points, seed + rnd)
            x, y = np.concatenate([x, xr]), np.concatenate([y, yr])
        cb = None if on_step is None else (lambda step, p, loss, rnd=rnd: on_step(rnd, step, p, loss))
        cfg = type(train_cfg)(train_cfg.learning_rate, train_cfg.batch_size, train_cfg.steps,
                              int(np.random.SeedSequence([train_cfg.rng_seed, rnd]).generate_state(1)[0]))
        head = train(head, x, y, cfg, on_step=cb)
    return head


def refine_sample(coarse_logits, features, head, render_cfg, trace=None):
    """Refined logits and the binary mask they give."""
    logits = refine(coarse_logits, features, head, render_cfg, trace)
    return logits, binarize(logits, render_cfg.binarize_threshold)


def refine_samples(samples, head, render_cfg):
    """Prediction instances for ``(image_id, class_id, score, coarse, features)`` tuples."""
    out = []
    for image_id, class_id, score, coarse, feats in samples:
        _, mask = refine_sample(coarse, feats, head, render_cfg)
        out.append(MaskInstance.from_dense(image_id, class_id, mask, score))
    return out


def mask_ious(pred_masks, true_masks):
    return np.array([mask_iou(rle_encode(p), rle_encode(t))
                     for p, t in zip(pred_masks, true_masks)])
