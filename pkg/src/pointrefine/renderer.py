"""Adaptive subdivision refinement of a coarse mask logit grid."""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import InvalidInputError
from .grid import as_grid, bilinear_sample, scatter_points, upsample2x
from .point_head import forward_batch
from .sampling import select_top_uncertain, uncertainty_from_logits

__all__ = ["RenderConfig", "RenderTrace", "refine", "binarize", "default_points_per_step"]


def default_points_per_step(coarse_shape, steps):
    out_w = coarse_shape[1] * 2 ** steps
    return out_w * out_w // 16


@dataclass(frozen=True)
class RenderConfig:
    """``points_per_step=None`` means ``output_width**2 // 16``."""

    subdivision_steps: int = 5
    points_per_step: int | None = None
    binarize_threshold: float = 0.5

    def __post_init__(self):
        if self.subdivision_steps < 1:
            raise InvalidInputError("subdivision_steps must be positive")
        if self.points_per_step is not None and self.points_per_step < 0:
            raise InvalidInputError("points_per_step must be non-negative")
        if not 0.0 < self.binarize_threshold < 1.0:
            raise InvalidInputError("binarize_threshold must be in (0, 1)")

    def points_for(self, coarse_shape):
        if self.points_per_step is None:
            return default_points_per_step(coarse_shape, self.subdivision_steps)
        return self.points_per_step


@dataclass
class RenderTrace:
    """Per-step record of a :func:`refine` run.

    ``points[s]`` and ``features[s]`` hold the selected points of step ``s`` and
    the point features the head was given for them.
    """

    head_evaluations: int = 0
    points: list = field(default_factory=list)
    features: list = field(default_factory=list)


def refine(coarse_logits, features, head, cfg, trace=None):
    """Refine a one-channel coarse logit grid to ``coarse * 2**S`` resolution.

    Each step upsamples the current grid, picks the ``N`` most uncertain
    cells, relabels them with the point head and writes the logits back.  A
    step on a grid with fewer than ``N`` cells relabels every cell.  Pass a
    :class:`RenderTrace` to record the selected points and head call count.
    """
    current = as_grid(coarse_logits)
    feats = as_grid(features)
    if current.shape[2] != 1:
        raise InvalidInputError("coarse logits must have a single channel")
    if head.input_size != 1 + feats.shape[2]:
        raise InvalidInputError(
            f"head expects {head.input_size} inputs, features give 1 + {feats.shape[2]}"
        )
    if head.coarse_dim != 1:
        raise InvalidInputError("head must take exactly one coarse input")
    n = cfg.points_for(current.shape)
    out_h = current.shape[0] * 2 ** cfg.subdivision_steps
    out_w = current.shape[1] * 2 ** cfg.subdivision_steps
    if n > out_h * out_w:
        raise InvalidInputError(f"{n} points per step exceed the {out_h}x{out_w} output")

    for _ in range(cfg.subdivision_steps):
        current = upsample2x(current)
        h, w, _c = current.shape
        k = min(n, h * w)
        if k == 0:
            continue
        pts = select_top_uncertain(uncertainty_from_logits(current), k)
        point_features = np.concatenate(
            [bilinear_sample(current, pts), bilinear_sample(feats, pts)], axis=1
        )
        logits = forward_batch(head, point_features)
        current = scatter_points(current, pts, logits)
        if trace is not None:
            trace.head_evaluations += len(logits)
            trace.points.append(pts)
            trace.features.append(point_features)
    return current[:, :, 0]


def binarize(logits, threshold=0.5):
    """Foreground where ``sigmoid(logit) >= threshold``; at 0.5 that is ``logit >= 0``."""
    g = as_grid(logits)[:, :, 0]
    if threshold == 0.5:
        return g >= 0.0
    return expit(g) >= threshold
