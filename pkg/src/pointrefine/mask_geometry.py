"""Binary masks as column-major run-length encodings, their geometry (area,
tight box, IoU) and even-odd polygon rasterization."""

from dataclasses import dataclass

import numpy as np

from .errors import CorruptMaskError, InvalidInputError

__all__ = [
    "DEFECT_CLASSES",
    "CLASS_DISPLAY_NAMES",
    "normalize_class_name",
    "BinaryMask",
    "BBox",
    "MaskInstance",
    "rle_encode",
    "rle_decode",
    "mask_area",
    "mask_iou",
    "bbox_iou",
    "mask_to_bbox",
    "polygon_to_mask",
]

# Ordered as in the dataset split table.
DEFECT_CLASSES = (
    "thin_bridge",
    "single_bridge",
    "multi_bridge_horizontal",
    "multi_bridge_non_horizontal",
    "line_collapse",
)

CLASS_DISPLAY_NAMES = {
    "thin_bridge": "Thin bridge",
    "single_bridge": "Single bridge",
    "multi_bridge_horizontal": "Multi bridge horizontal",
    "multi_bridge_non_horizontal": "Multi bridge non-horizontal",
    "line_collapse": "Line collapse",
}


def normalize_class_name(name):
    """Map free-form labels such as ``"Multi bridge non-horizontal"`` to class ids.

    Returns ``None`` for names outside the five defect classes.
    """
    key = "_".join(str(name).strip().lower().replace("-", " ").replace("_", " ").split())
    return key if key in DEFECT_CLASSES else None


@dataclass(frozen=True)
class BinaryMask:
    height: int
    width: int
    counts: tuple

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        _validate_counts(self.height, self.width, self.counts)

    @classmethod
    def from_dense(cls, dense):
        return rle_encode(dense)

    def to_dense(self):
        return rle_decode(self)

    @property
    def area(self):
        return mask_area(self)

    def to_json(self):
        return {"size": [self.height, self.width], "counts": list(self.counts)}

    @classmethod
    def from_json(cls, obj):
        h, w = obj["size"]
        return cls(int(h), int(w), obj["counts"])


def _validate_counts(height, width, counts):
    if height < 1 or width < 1:
        raise InvalidInputError(f"mask dimensions must be positive, got {height}x{width}")
    if any(c < 0 for c in counts):
        raise CorruptMaskError("negative run length")
    if any(c == 0 for c in counts[1:]):
        raise CorruptMaskError("zero-length run after the leading background run")
    total = sum(counts)
    if total != height * width:
        raise CorruptMaskError(f"runs sum to {total}, expected {height * width}")


@dataclass(frozen=True)
class BBox:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if self.w < 0 or self.h < 0:
            raise InvalidInputError("bbox extents must be non-negative")

    @property
    def area(self):
        return self.w * self.h

    def to_list(self):
        return [self.x, self.y, self.w, self.h]


@dataclass(frozen=True)
class MaskInstance:
    image_id: str
    class_id: str
    score: float
    bbox: BBox
    mask: BinaryMask

    def __post_init__(self):
        if self.class_id not in DEFECT_CLASSES:
            raise InvalidInputError(f"unknown defect class {self.class_id!r}")
        if not 0.0 <= self.score <= 1.0:
            raise InvalidInputError(f"score {self.score} outside [0, 1]")

    @classmethod
    def from_dense(cls, image_id, class_id, dense, score=1.0):
        mask = rle_encode(dense)
        return cls(str(image_id), class_id, float(score), mask_to_bbox(mask), mask)

    @property
    def area(self):
        return mask_area(self.mask)


def rle_encode(dense):
    """Encode a 2D boolean array; runs alternate background/foreground in
    column-major order, starting with a (possibly empty) background run."""
    m = np.asarray(dense)
    if m.ndim != 2:
        raise InvalidInputError(f"mask must be 2D, got shape {m.shape}")
    flat = m.astype(bool).ravel(order="F")
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate([[0], change, [flat.size]])
    runs = np.diff(bounds).tolist()
    if flat.size and flat[0]:
        runs = [0] + runs
    return BinaryMask(m.shape[0], m.shape[1], runs)


def rle_decode(mask):
    counts = mask.counts
    _validate_counts(mask.height, mask.width, counts)
    values = np.arange(len(counts)) % 2 == 1
    flat = np.repeat(values, counts)
    return flat.reshape((mask.height, mask.width), order="F")


def mask_area(mask):
    return int(sum(mask.counts[1::2]))


def _same_size(a, b):
    if (a.height, a.width) != (b.height, b.width):
        raise InvalidInputError(
            f"mask sizes differ: {a.height}x{a.width} vs {b.height}x{b.width}"
        )


def mask_iou(a, b):
    """Intersection over union; 0 when both masks are empty."""
    _same_size(a, b)
    da, db = rle_decode(a), rle_decode(b)
    union = np.count_nonzero(da | db)
    if union == 0:
        return 0.0
    return np.count_nonzero(da & db) / union


def bbox_iou(a, b):
    iw = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    ih = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    inter = max(iw, 0.0) * max(ih, 0.0)
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return inter / union


def mask_to_bbox(mask):
    """Tight pixel box ``(x, y, w, h)``; an empty mask gives a zero box."""
    dense = mask if isinstance(mask, np.ndarray) else rle_decode(mask)
    rows = np.flatnonzero(dense.any(axis=1))
    cols = np.flatnonzero(dense.any(axis=0))
    if len(rows) == 0:
        return BBox(0.0, 0.0, 0.0, 0.0)
    return BBox(float(cols[0]), float(rows[0]),
                float(cols[-1] - cols[0] + 1), float(rows[-1] - rows[0] + 1))


def polygon_to_mask(xs, ys, height, width):
    """Rasterize a polygon given in pixel coordinates (pixel ``(r, c)`` spans
    ``[c, c+1] x [r, r+1]``).

    A pixel is foreground when its center is inside under the even-odd rule
    or lies exactly on an edge.
    """
    xs = np.asarray(xs, dtype=np.float64).ravel()
    ys = np.asarray(ys, dtype=np.float64).ravel()
    if len(xs) != len(ys):
        raise InvalidInputError("polygon x and y lists differ in length")
    if len(xs) < 3:
        raise InvalidInputError(f"polygon needs at least 3 vertices, got {len(xs)}")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise InvalidInputError("non-finite polygon vertex")
    px = (np.arange(width) + 0.5)[None, :]
    py = (np.arange(height) + 0.5)[:, None]
    inside = np.zeros((height, width), dtype=bool)
    on_edge = np.zeros((height, width), dtype=bool)
    for x1, y1, x2, y2 in zip(xs, ys, np.roll(xs, -1), np.roll(ys, -1)):
        cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
        on_edge |= ((cross == 0)
                    & (px >= min(x1, x2)) & (px <= max(x1, x2))
                    & (py >= min(y1, y2)) & (py <= max(y1, y2)))
        if y1 == y2:
            continue
        # Center lies left of the crossing iff the cross product has the
        # sign of the edge's vertical direction.
        straddles = (y1 > py) != (y2 > py)
        inside ^= straddles & ((cross > 0) == (y2 > y1)) & (cross != 0)
    return rle_encode(inside | on_edge)
