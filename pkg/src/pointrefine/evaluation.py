"""COCO-style average precision for defect detections and masks.

Matching is greedy in descending score order with single consumption of
ground truth; precision is interpolated at 101 recall points.  Ground truth
outside an area range is ignored rather than penalized, as are unmatched
predictions outside the range.
"""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .mask_geometry import CLASS_DISPLAY_NAMES, DEFECT_CLASSES, bbox_iou, mask_area, mask_iou

__all__ = [
    "EvalConfig",
    "APReport",
    "MatchResult",
    "match_detections",
    "average_precision",
    "evaluate",
    "relative_improvement",
    "format_ap_table",
    "format_comparison",
    "DEFAULT_IOU_THRESHOLDS",
    "DEFAULT_AREA_RANGES",
    "RECALL_THRESHOLDS",
]

log = logging.getLogger(__name__)

DEFAULT_IOU_THRESHOLDS = tuple(np.linspace(0.5, 0.95, 10).tolist())
RECALL_THRESHOLDS = np.linspace(0.0, 1.0, 101)
DEFAULT_AREA_RANGES = {
    "all": (0.0, 1e10),
    "medium": (32.0 ** 2, 96.0 ** 2),
    "large": (96.0 ** 2, 1e10),
}
MODES = ("bbox", "segmentation")


@dataclass(frozen=True)
class EvalConfig:
    iou_thresholds: tuple = DEFAULT_IOU_THRESHOLDS
    area_ranges: dict = field(default_factory=lambda: dict(DEFAULT_AREA_RANGES))
    mode: str = "segmentation"
    max_detections: int | None = None
    strict: bool = True

    def __post_init__(self):
        t = np.asarray(self.iou_thresholds, dtype=np.float64)
        if t.ndim != 1 or len(t) == 0:
            raise InvalidInputError("need at least one IoU threshold")
        if np.any(t <= 0) or np.any(t > 1) or np.any(np.diff(t) <= 0):
            raise InvalidInputError("IoU thresholds must be strictly increasing in (0, 1]")
        if self.mode not in MODES:
            raise InvalidInputError(f"mode must be one of {MODES}, got {self.mode!r}")
        if "all" not in self.area_ranges:
            raise InvalidInputError("area_ranges must include 'all'")


@dataclass
class MatchResult:
    """Outcome of matching one (image, class) group at one threshold.

    ``pred_match[i]`` is the matched ground-truth index or -1; ignored
    predictions are excluded from scoring.  Indices refer to the input lists.
    """

    pred_match: np.ndarray
    pred_ignored: np.ndarray
    gt_matched: np.ndarray

    @property
    def pred_is_tp(self):
        return self.pred_match >= 0


def _area(inst, mode):
    return inst.bbox.area if mode == "bbox" else float(mask_area(inst.mask))


def _iou_matrix(preds, gts, mode):
    ious = np.zeros((len(preds), len(gts)))
    for i, p in enumerate(preds):
        for j, g in enumerate(gts):
            if mode == "bbox":
                ious[i, j] = bbox_iou(p.bbox, g.bbox)
            else:
                ious[i, j] = mask_iou(p.mask, g.mask)
    return ious


def _score_order(preds):
    scores = np.array([p.score for p in preds], dtype=np.float64)
    return np.argsort(-scores, kind="stable")


def _match_sorted(ious, gt_ignore, iou_thr):
    """Greedy matching on score-sorted predictions and ignore-last gts."""
    n_pred, n_gt = ious.shape
    pred_match = np.full(n_pred, -1)
    gt_taken = np.zeros(n_gt, dtype=bool)
    for d in range(n_pred):
        best = min(iou_thr, 1 - 1e-10)
        m = -1
        for g in range(n_gt):
            if gt_taken[g]:
                continue
            # Once a countable gt is matched, ignored ones cannot displace it.
            if m > -1 and not gt_ignore[m] and gt_ignore[g]:
                break
            if ious[d, g] < best:
                continue
            best = ious[d, g]
            m = g
        if m > -1:
            pred_match[d] = m
            gt_taken[m] = True
    return pred_match, gt_taken


def match_detections(preds, gts, iou_thr, mode="segmentation", area_range=(0.0, 1e10),
                     ious=None):
    """Label predictions of one image and class as matched or not.

    Predictions are visited by descending score (ties keep input order); each
    takes the free ground truth of highest IoU ``>= iou_thr``.
    """
    lo, hi = area_range
    gt_ignore_in = np.array([not lo <= _area(g, mode) <= hi for g in gts], dtype=bool)
    d_order = _score_order(preds)
    g_order = np.argsort(gt_ignore_in, kind="stable")
    if ious is None:
        ious = _iou_matrix(preds, gts, mode)
    sorted_ious = ious[np.ix_(d_order, g_order)] if len(preds) and len(gts) else \
        np.zeros((len(preds), len(gts)))
    gt_ignore = gt_ignore_in[g_order]
    m_sorted, taken_sorted = _match_sorted(sorted_ious, gt_ignore, iou_thr)

    pred_match = np.full(len(preds), -1)
    pred_ignored = np.zeros(len(preds), dtype=bool)
    for rank, d in enumerate(d_order):
        m = m_sorted[rank]
        if m > -1:
            pred_match[d] = g_order[m]
            pred_ignored[d] = gt_ignore[m]
        else:
            pred_ignored[d] = not lo <= _area(preds[d], mode) <= hi
    gt_matched = np.zeros(len(gts), dtype=bool)
    gt_matched[g_order] = taken_sorted
    return MatchResult(pred_match, pred_ignored, gt_matched)


def _interpolated_ap(tp, fp, num_gt):
    tp_sum = np.cumsum(tp, dtype=np.float64)
    fp_sum = np.cumsum(fp, dtype=np.float64)
    recall = tp_sum / num_gt
    denom = tp_sum + fp_sum
    precision = np.divide(tp_sum, denom, out=np.zeros_like(tp_sum), where=denom > 0)
    precision = np.maximum.accumulate(precision[::-1])[::-1] if len(precision) else precision
    idx = np.searchsorted(recall, RECALL_THRESHOLDS, side="left")
    q = np.zeros(len(RECALL_THRESHOLDS))
    valid = idx < len(precision)
    q[valid] = precision[idx[valid]]
    return float(q.mean())


def average_precision(labels, num_gt):
    """101-point interpolated AP of score-ordered TP (True) / FP (False) labels.

    Returns ``nan`` when there is no ground truth; such classes are left out of
    means rather than scored 0.
    """
    if num_gt < 0:
        raise InvalidInputError("num_gt must be non-negative")
    if num_gt == 0:
        return math.nan
    tp = np.asarray(labels, dtype=bool)
    return _interpolated_ap(tp, ~tp, num_gt)


@dataclass
class APReport:
    """AP values indexed ``ap[area, threshold, class]`` (nan = no ground truth)."""

    mode: str
    iou_thresholds: tuple
    area_ranges: dict
    classes: tuple
    ap: np.ndarray

    def _area_index(self, area):
        return list(self.area_ranges).index(area)

    def _threshold_index(self, thr):
        hits = np.flatnonzero(np.isclose(self.iou_thresholds, thr))
        return int(hits[0]) if len(hits) else None

    def per_class(self, area="all", threshold=None):
        """Class -> AP averaged over thresholds (or at one threshold)."""
        block = self.ap[self._area_index(area)]
        if threshold is not None:
            ti = self._threshold_index(threshold)
            if ti is None:
                return {}
            values = block[ti]
        else:
            values = _nanmean(block, axis=0)
        return {c: float(v) for c, v in zip(self.classes, values) if not math.isnan(v)}

    def mean_ap(self, area="all", threshold=None, classes=None):
        """Mean over classes with ground truth, optionally only over ``classes``."""
        per_class = self.per_class(area, threshold)
        values = [v for c, v in per_class.items() if classes is None or c in classes]
        return float(np.mean(values)) if values else math.nan

    @property
    def map(self):
        return self.mean_ap("all")

    @property
    def ap50(self):
        return self.mean_ap("all", 0.5)

    @property
    def ap75(self):
        return self.mean_ap("all", 0.75)

    def summary(self, classes=None):
        out = {"map": self.mean_ap("all", None, classes),
               "ap50": self.mean_ap("all", 0.5, classes),
               "ap75": self.mean_ap("all", 0.75, classes)}
        for area in self.area_ranges:
            if area != "all":
                out[f"map_{area}"] = self.mean_ap(area, None, classes)
        return out

    def to_dict(self):
        return {
            "mode": self.mode,
            "iou_thresholds": [float(t) for t in self.iou_thresholds],
            "area_ranges": {k: [float(v[0]), float(v[1])] for k, v in self.area_ranges.items()},
            "classes": list(self.classes),
            "ap": _nan_to_none(self.ap.tolist()),
            "per_class": self.per_class("all"),
            "summary": _nan_to_none(self.summary()),
        }

    @classmethod
    def from_dict(cls, obj):
        ap = np.array(_none_to_nan(obj["ap"]), dtype=np.float64)
        return cls(obj["mode"], tuple(obj["iou_thresholds"]),
                   {k: tuple(v) for k, v in obj["area_ranges"].items()},
                   tuple(obj["classes"]), ap)


def _nanmean(a, axis):
    a = np.asarray(a, dtype=np.float64)
    count = np.sum(~np.isnan(a), axis=axis)
    total = np.nansum(a, axis=axis)
    return np.where(count > 0, total / np.maximum(count, 1), np.nan)


def _nan_to_none(obj):
    if isinstance(obj, dict):
        return {k: _nan_to_none(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_nan_to_none(v) for v in obj]
    if isinstance(obj, float) and math.isnan(obj):
        return None
    return obj


def _none_to_nan(obj):
    if isinstance(obj, list):
        return [_none_to_nan(v) for v in obj]
    return math.nan if obj is None else obj


def _check_classes(instances, strict, what):
    kept = []
    for inst in instances:
        if inst.class_id in DEFECT_CLASSES:
            kept.append(inst)
        elif strict:
            raise InvalidInputError(f"unknown class {inst.class_id!r} in {what}")
        else:
            log.warning("skipping %s with unknown class %r", what, inst.class_id)
    return kept


def evaluate(preds, gts, cfg=None):
    """AP per area range, IoU threshold and class over a whole dataset."""
    cfg = cfg or EvalConfig()
    preds = _check_classes(preds, cfg.strict, "prediction")
    gts = _check_classes(gts, cfg.strict, "ground truth")
    thresholds = tuple(float(t) for t in cfg.iou_thresholds)
    areas = dict(cfg.area_ranges)

    groups = defaultdict(lambda: ([], []))
    for p in preds:
        groups[(p.class_id, p.image_id)][0].append(p)
    for g in gts:
        groups[(g.class_id, g.image_id)][1].append(g)
    image_ids = sorted({k[1] for k in groups})

    ap = np.full((len(areas), len(thresholds), len(DEFECT_CLASSES)), np.nan)
    for k, cls in enumerate(DEFECT_CLASSES):
        per_image = []
        for image_id in image_ids:
            p, g = groups.get((cls, image_id), ([], []))
            if not p and not g:
                continue
            p = [p[i] for i in _score_order(p)]
            if cfg.max_detections is not None:
                p = p[:cfg.max_detections]
            per_image.append((p, g, _iou_matrix(p, g, cfg.mode)))

        for a, area_range in enumerate(areas.values()):
            lo, hi = area_range
            num_gt = sum(1 for _, g, _ in per_image for x in g
                         if lo <= _area(x, cfg.mode) <= hi)
            if num_gt == 0:
                continue
            for t, thr in enumerate(thresholds):
                scores, tps, ignored = [], [], []
                for p, g, ious in per_image:
                    res = match_detections(p, g, thr, cfg.mode, area_range, ious)
                    scores.extend(x.score for x in p)
                    tps.extend(res.pred_is_tp)
                    ignored.extend(res.pred_ignored)
                order = np.argsort(-np.asarray(scores, dtype=np.float64), kind="mergesort")
                tp = np.asarray(tps, dtype=bool)[order]
                ig = np.asarray(ignored, dtype=bool)[order]
                ap[a, t, k] = _interpolated_ap(tp & ~ig, ~tp & ~ig, num_gt)
    return APReport(cfg.mode, thresholds, areas, DEFECT_CLASSES, ap)


def relative_improvement(baseline, improved, ndigits=1):
    """Percentage change from ``baseline`` to ``improved``, rounded to ``ndigits``
    (``None`` keeps full precision)."""
    if not baseline > 0:
        raise InvalidInputError(f"baseline must be positive, got {baseline}")
    value = 100.0 * (improved - baseline) / baseline
    return value if ndigits is None else round(value, ndigits)


def _fmt(v, digits=3):
    return "-" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.{digits}f}"


def format_ap_table(bbox_per_class, segm_per_class, bbox_map, segm_map):
    """Per-class table with BBox AP and Segmentation AP columns and a mean row."""
    rows = [("Class Name", "BBox AP", "Segmentation AP")]
    for cls in DEFECT_CLASSES:
        if cls in bbox_per_class or cls in segm_per_class:
            rows.append((CLASS_DISPLAY_NAMES[cls], _fmt(bbox_per_class.get(cls)),
                         _fmt(segm_per_class.get(cls))))
    rows.append(("Total (mAP)", _fmt(bbox_map), _fmt(segm_map)))
    return _align(rows)


_COMPARISON_ROWS = (
    ("IOU 0.5:0.95", "map"),
    ("IOU 0.5", "ap50"),
    ("IOU 0.75", "ap75"),
    ("Medium area", "map_medium"),
    ("Large area", "map_large"),
)


def format_comparison(baseline, improved, baseline_name="baseline", improved_name="improved"):
    """Side-by-side mAP table of two evaluation summaries with relative gains.

    Both arguments map ``"bbox"`` and ``"segmentation"`` to summary dicts with
    keys ``map``, ``ap50``, ``ap75``, ``map_medium`` and ``map_large``.
    """
    header = ("mAP with...",
              f"{baseline_name} BBox", f"{baseline_name} Segm",
              f"{improved_name} BBox", f"{improved_name} Segm",
              "BBox gain %", "Segm gain %")
    rows = [header]
    for label, key in _COMPARISON_ROWS:
        vals = [baseline["bbox"].get(key), baseline["segmentation"].get(key),
                improved["bbox"].get(key), improved["segmentation"].get(key)]
        gains = []
        for b, i in ((vals[0], vals[2]), (vals[1], vals[3])):
            if b is None or i is None or not b > 0:
                gains.append("-")
            else:
                gains.append(f"{relative_improvement(b, i):.1f}")
        rows.append((label, *[_fmt(v) for v in vals], *gains))
    return _align(rows)


def _align(rows):
    widths = [max(len(str(r[i])) for r in rows) for i in range(len(rows[0]))]
    lines = []
    for n, row in enumerate(rows):
        cells = [str(row[0]).ljust(widths[0])]
        cells += [str(c).rjust(w) for c, w in zip(row[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
        if n == 0:
            lines.append("-" * len(lines[0]))
    return "\n".join(lines) + "\n"
