"""Per-class descriptive statistics of mask areas and box-plot data."""

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .mask_geometry import CLASS_DISPLAY_NAMES, DEFECT_CLASSES, mask_area

__all__ = ["AreaStats", "area_statistics", "boxplot_series", "format_stats_table",
           "STATS_COLUMNS"]

STATS_COLUMNS = ("Count", "Mean", "Std", "Min", "25%", "50%", "75%", "Max")


@dataclass(frozen=True)
class AreaStats:
    """Area summary for one class.

    ``single_instance`` flags rows whose std of 0 is a convention rather than
    an estimate.  ``values`` keeps the sorted raw areas for box-plot outliers.
    """

    class_id: str
    count: int
    mean: float
    std: float
    min: float
    q25: float
    q50: float
    q75: float
    max: float
    single_instance: bool
    values: tuple

    def row(self):
        return (self.count, self.mean, self.std, self.min, self.q25, self.q50, self.q75, self.max)

    def to_dict(self):
        return {
            "class": self.class_id,
            "count": self.count,
            "mean": self.mean,
            "std": self.std,
            "min": self.min,
            "q25": self.q25,
            "q50": self.q50,
            "q75": self.q75,
            "max": self.max,
            "single_instance": self.single_instance,
        }


def _summarize(class_id, areas):
    a = np.sort(np.asarray(areas, dtype=np.float64))
    n = len(a)
    q25, q50, q75 = np.quantile(a, [0.25, 0.5, 0.75])
    std = float(np.std(a, ddof=1)) if n > 1 else 0.0
    return AreaStats(class_id, n, float(a.mean()), std, float(a[0]), float(q25), float(q50),
                     float(q75), float(a[-1]), n == 1, tuple(a.tolist()))


def area_statistics(instances, min_score=None):
    """One :class:`AreaStats` per class present, in class order.

    Uses the sample (n - 1) standard deviation and linearly interpolated
    quantiles.  Instances scoring below ``min_score`` are dropped first.
    Also accepts a mapping of class id to a list of areas.
    """
    if isinstance(instances, dict):
        by_class = {c: list(v) for c, v in instances.items() if len(v)}
    else:
        by_class = defaultdict(list)
        for inst in instances:
            if min_score is not None and inst.score < min_score:
                continue
            by_class[inst.class_id].append(mask_area(inst.mask))
    if not by_class:
        raise InvalidInputError("no instances to summarize")
    order = [c for c in DEFECT_CLASSES if c in by_class]
    order += sorted(c for c in by_class if c not in DEFECT_CLASSES)
    return [_summarize(c, by_class[c]) for c in order]


def boxplot_series(stats, whisker=1.5):
    """Box, whisker and outlier coordinates per class, ready for JSON export.

    Whiskers reach the most extreme data within ``whisker * IQR`` of the box.
    """
    series = []
    for s in stats:
        a = np.asarray(s.values, dtype=np.float64)
        iqr = s.q75 - s.q25
        lo_fence = s.q25 - whisker * iqr
        hi_fence = s.q75 + whisker * iqr
        inside = a[(a >= lo_fence) & (a <= hi_fence)]
        series.append({
            "class": s.class_id,
            "q25": s.q25,
            "median": s.q50,
            "q75": s.q75,
            "whisker_low": float(inside.min()),
            "whisker_high": float(inside.max()),
            "outliers": a[(a < lo_fence) | (a > hi_fence)].tolist(),
            "count": s.count,
        })
    return {"whisker_iqr_factor": whisker, "series": series}


def format_stats_table(stats):
    header = ("Defect Class", *STATS_COLUMNS)
    rows = [header]
    for s in stats:
        name = CLASS_DISPLAY_NAMES.get(s.class_id, s.class_id)
        rows.append((name, str(s.count), *[f"{v:.1f}" for v in s.row()[1:]]))
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = []
    for n, r in enumerate(rows):
        line = "  ".join([r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])])
        lines.append(line)
        if n == 0:
            lines.append("-" * len(line))
    return "\n".join(lines) + "\n"
