"""Dense 2D grids: bilinear point sampling, 2x upsampling and point scatter.

Grids are numpy arrays of shape ``(H, W)`` or ``(H, W, C)`` stored row-major.
Points are ``(N, 2)`` arrays of normalized ``(x, y)`` coordinates in
``[0, 1]``; ``x`` runs along columns and ``y`` along rows.  Cell ``(i, j)``
has its center at ``((j + 0.5) / W, (i + 0.5) / H)``.
"""

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "as_grid",
    "as_points",
    "cell_centers",
    "bilinear_sample",
    "upsample2x",
    "scatter_points",
    "nearest_cells",
]

# Continuous pixel positions this close to an integer are snapped onto it, so
# sampling at a cell center returns that cell's value exactly.
_SNAP = 1e-9


def as_grid(values):
    """Return ``values`` as a float64 ``(H, W, C)`` array, validating it."""
    g = np.asarray(values, dtype=np.float64)
    if g.ndim == 2:
        g = g[:, :, None]
    if g.ndim != 3:
        raise InvalidInputError(f"grid must be 2D or 3D, got shape {g.shape}")
    if min(g.shape) < 1:
        raise InvalidInputError(f"grid dimensions must be >= 1, got {g.shape}")
    if not np.all(np.isfinite(g)):
        raise InvalidInputError("grid contains non-finite values")
    return g


def as_points(points):
    p = np.asarray(points, dtype=np.float64)
    if p.size == 0:
        return np.zeros((0, 2))
    p = p.reshape(-1, 2) if p.ndim == 1 else p
    if p.ndim != 2 or p.shape[1] != 2:
        raise InvalidInputError(f"points must have shape (N, 2), got {p.shape}")
    if not np.all(np.isfinite(p)):
        raise InvalidInputError("non-finite point coordinate")
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise InvalidInputError("point coordinates must lie in [0, 1]")
    return p


def _like_input(out, values):
    return out[:, :, 0] if np.ndim(values) == 2 else out


def cell_centers(height, width, rows=None, cols=None):
    """Normalized centers of the given cells (all cells, row-major, by default)."""
    if rows is None:
        rows, cols = np.divmod(np.arange(height * width), width)
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    return np.stack([(cols + 0.5) / width, (rows + 0.5) / height], axis=1)


def _continuous(coord, size):
    t = coord * size - 0.5
    r = np.round(t)
    t = np.where(np.abs(t - r) < _SNAP, r, t)
    return np.clip(t, 0.0, size - 1)


def bilinear_sample(grid, points):
    """Sample ``grid`` at ``points``; returns an ``(N, C)`` array.

    Align-corners-false convention; queries beyond the outermost cell centers
    clamp to the border.
    """
    g = as_grid(grid)
    p = as_points(points)
    h, w, c = g.shape
    if len(p) == 0:
        return np.zeros((0, c))
    tx = _continuous(p[:, 0], w)
    ty = _continuous(p[:, 1], h)
    x0 = np.floor(tx).astype(np.int64)
    y0 = np.floor(ty).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    wx = (tx - x0)[:, None]
    wy = (ty - y0)[:, None]
    top = g[y0, x0] + wx * (g[y0, x1] - g[y0, x0])
    bottom = g[y1, x0] + wx * (g[y1, x1] - g[y1, x0])
    return top + wy * (bottom - top)


def _upsample_axis(a, axis):
    # Output cell 2i sits a quarter cell before input cell i, 2i+1 a quarter after.
    n = a.shape[axis]
    idx = np.arange(n)
    here = a
    before = np.take(a, np.maximum(idx - 1, 0), axis=axis)
    after = np.take(a, np.minimum(idx + 1, n - 1), axis=axis)
    even = here + 0.25 * (before - here)
    odd = here + 0.25 * (after - here)
    out_shape = list(a.shape)
    out_shape[axis] = 2 * n
    out = np.empty(out_shape)
    sl_even = [slice(None)] * a.ndim
    sl_odd = [slice(None)] * a.ndim
    sl_even[axis] = slice(0, None, 2)
    sl_odd[axis] = slice(1, None, 2)
    out[tuple(sl_even)] = even
    out[tuple(sl_odd)] = odd
    return out


def upsample2x(grid):
    """Bilinear 2x upsampling: output is ``(2H, 2W[, C])``."""
    g = as_grid(grid)
    out = _upsample_axis(_upsample_axis(g, 0), 1)
    return _like_input(out, grid)


def nearest_cells(height, width, points):
    """Row and column of the cell whose center is nearest each point.

    Equidistant points go to the smaller row, then the smaller column.
    """
    p = as_points(points)
    cols = np.ceil(p[:, 0] * width - 1.0).astype(np.int64)
    rows = np.ceil(p[:, 1] * height - 1.0).astype(np.int64)
    return np.clip(rows, 0, height - 1), np.clip(cols, 0, width - 1)


def scatter_points(grid, points, values):
    """Overwrite the cell nearest each point with the matching value.

    Returns a new grid; if two points land in one cell the later one wins.
    """
    g = as_grid(grid).copy()
    p = as_points(points)
    v = np.asarray(values, dtype=np.float64)
    if v.ndim == 1:
        v = v[:, None]
    if len(v) != len(p):
        raise InvalidInputError(f"{len(p)} points but {len(v)} values")
    if len(p):
        if v.shape[1] != g.shape[2]:
            raise InvalidInputError(
                f"values have {v.shape[1]} channels, grid has {g.shape[2]}"
            )
        rows, cols = nearest_cells(g.shape[0], g.shape[1], p)
        g[rows, cols] = v
    return _like_input(g, grid)
