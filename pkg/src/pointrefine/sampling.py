"""Point selection: uncertainty scoring, top-N inference selection and the
border-biased random sampler used for training."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .grid import as_grid, cell_centers

__all__ = [
    "TrainSamplerConfig",
    "uncertainty_from_logits",
    "select_top_uncertain",
    "top_uncertain_cells",
    "sample_training_points",
]


@dataclass(frozen=True)
class TrainSamplerConfig:
    num_points: int = 196
    oversample_factor: float = 3.0
    importance_ratio: float = 0.75
    rng_seed: int = 0

    def __post_init__(self):
        if self.num_points < 1:
            raise InvalidInputError("num_points must be positive")
        if self.oversample_factor < 1:
            raise InvalidInputError("oversample_factor must be >= 1")
        if not 0.0 <= self.importance_ratio <= 1.0:
            raise InvalidInputError("importance_ratio must be in [0, 1]")

    @property
    def num_candidates(self):
        return math.ceil(self.oversample_factor * self.num_points)

    @property
    def num_important(self):
        return math.floor(self.importance_ratio * self.num_points)


def uncertainty_from_logits(logits):
    """Per-cell uncertainty, larger meaning closer to the decision boundary.

    One channel: ``-|logit|``.  Several channels: the negated gap between the
    best and second-best class score.  Returns an ``(H, W)`` array.
    """
    g = as_grid(logits)
    if g.shape[2] == 1:
        return -np.abs(g[:, :, 0])
    top2 = np.sort(g, axis=2)[:, :, -2:]
    return -(top2[:, :, 1] - top2[:, :, 0])


def top_uncertain_cells(u, n):
    """Flat row-major indices of the ``n`` most uncertain cells.

    Ties resolve to the smaller (row, column) index.
    """
    u = np.asarray(u, dtype=np.float64)
    if u.ndim == 3:
        u = u[:, :, 0]
    if n < 0 or n > u.size:
        raise InvalidInputError(f"cannot select {n} points from {u.size} cells")
    order = np.argsort(-u.ravel(), kind="stable")
    return order[:n]


def select_top_uncertain(u, n):
    """Cell-center coordinates of the ``n`` most uncertain cells, most uncertain first."""
    u = np.asarray(u, dtype=np.float64)
    if u.ndim == 3:
        u = u[:, :, 0]
    h, w = u.shape
    rows, cols = np.divmod(top_uncertain_cells(u, n), w)
    return cell_centers(h, w, rows, cols)


def sample_training_points(u_eval, cfg):
    """Draw ``cfg.num_points`` points biased towards uncertain regions.

    ``u_eval`` maps an ``(M, 2)`` array of points to ``M`` uncertainties.
    Oversampled candidates are drawn uniformly, the most uncertain
    ``floor(beta * N)`` of them are kept (in draw order), and the remainder is
    filled with fresh uniform points.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    n = cfg.num_points
    n_imp = cfg.num_important
    if n_imp == 0:
        return rng.random((n, 2))
    candidates = rng.random((cfg.num_candidates, 2))
    u = np.asarray(u_eval(candidates), dtype=np.float64).reshape(-1)
    if len(u) != len(candidates):
        raise InvalidInputError("u_eval must return one value per point")
    keep = np.sort(np.argsort(-u, kind="stable")[:n_imp])
    fill = rng.random((n - n_imp, 2))
    return np.concatenate([candidates[keep], fill], axis=0)
