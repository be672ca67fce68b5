"""Independent reference implementations used as test oracles.

Each one is written from the definition, in plain Python where practical,
and shares no code with the package beyond its data types.
"""

import functools
import math
from fractions import Fraction

import numpy as np

# ---------------------------------------------------------------- point head


def reference_forward(params, x):
    """Logit of one feature vector via explicit loops over neurons."""
    coarse = list(x[:params.coarse_dim])
    act = [float(v) for v in x]
    n_layers = len(params.weights)
    for layer in range(n_layers):
        inp = act + (coarse if layer > 0 and params.coarse_skip else [])
        w, b = params.weights[layer], params.biases[layer]
        out = []
        for r in range(w.shape[0]):
            s = float(b[r])
            for c, v in enumerate(inp):
                s += float(w[r, c]) * v
            out.append(s if layer == n_layers - 1 else max(s, 0.0))
        act = out
    return act[0]


def reference_loss(params, xs, ys):
    total = 0.0
    for x, y in zip(xs, ys):
        z = reference_forward(params, x)
        p_log = -math.log1p(math.exp(-z)) if z >= 0 else z - math.log1p(math.exp(z))
        q_log = -z - math.log1p(math.exp(-z)) if z >= 0 else -math.log1p(math.exp(z))
        total -= y * p_log + (1 - y) * q_log
    return total / len(xs)


def finite_difference_grad(loss_fn, flat, h=1e-5):
    grad = np.zeros_like(flat)
    for i in range(len(flat)):
        up, down = flat.copy(), flat.copy()
        up[i] += h
        down[i] -= h
        grad[i] = (loss_fn(up) - loss_fn(down)) / (2 * h)
    return grad


def gradient_mismatch(analytic, numeric, floor=1e-6):
    """Worst relative error with an absolute floor in the denominator."""
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


# ---------------------------------------------------------------- polygons


def point_in_polygon(px, py, xs, ys):
    """Exact even-odd test in rationals; points on an edge count as inside."""
    px, py = Fraction(px), Fraction(py)
    pts = [(Fraction(x), Fraction(y)) for x, y in zip(xs, ys)]
    inside = False
    for k in range(len(pts)):
        (x1, y1), (x2, y2) = pts[k], pts[(k + 1) % len(pts)]
        cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
        if cross == 0 and min(x1, x2) <= px <= max(x1, x2) and min(y1, y2) <= py <= max(y1, y2):
            return True
        if (y1 > py) != (y2 > py):
            x_at = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            if px < x_at:
                inside = not inside
    return inside


def rasterize_by_points(xs, ys, height, width):
    out = np.zeros((height, width), dtype=bool)
    for r in range(height):
        for c in range(width):
            out[r, c] = point_in_polygon(Fraction(2 * c + 1, 2), Fraction(2 * r + 1, 2), xs, ys)
    return out


# ---------------------------------------------------------------- statistics


def reference_quantile(sorted_values, q):
    """Linear interpolation between order statistics at position q*(n-1)."""
    pos = q * (len(sorted_values) - 1)
    lo = math.floor(pos)
    hi = min(lo + 1, len(sorted_values) - 1)
    return sorted_values[lo] + (pos - lo) * (sorted_values[hi] - sorted_values[lo])


def reference_summary(values):
    v = sorted(float(a) for a in values)
    n = len(v)
    mean = math.fsum(v) / n
    std = math.sqrt(math.fsum((a - mean) ** 2 for a in v) / (n - 1)) if n > 1 else 0.0
    return {"count": n, "mean": mean, "std": std, "min": v[0],
            "q25": reference_quantile(v, 0.25), "q50": reference_quantile(v, 0.5),
            "q75": reference_quantile(v, 0.75), "max": v[-1]}


# ---------------------------------------------------------------- evaluation


def _dense(inst):
    return _dense_mask(inst.mask)


@functools.lru_cache(maxsize=4096)
def _dense_mask(mask):
    flat = []
    for k, run in enumerate(mask.counts):
        flat.extend([k % 2 == 1] * run)
    return np.array(flat, dtype=bool).reshape((mask.height, mask.width), order="F")


def _iou(a, b, mode):
    if mode == "segmentation":
        return _mask_iou(a.mask, b.mask)
    return _bbox_iou(a, b)


@functools.lru_cache(maxsize=65536)
def _mask_iou(ma, mb):
    da, db = _dense_mask(ma), _dense_mask(mb)
    union = int((da | db).sum())
    return int((da & db).sum()) / union if union else 0.0


def _bbox_iou(a, b):
    ax0, ay0, aw, ah = a.bbox.to_list()
    bx0, by0, bw, bh = b.bbox.to_list()
    iw = max(0.0, min(ax0 + aw, bx0 + bw) - max(ax0, bx0))
    ih = max(0.0, min(ay0 + ah, by0 + bh) - max(ay0, by0))
    union = aw * ah + bw * bh - iw * ih
    return iw * ih / union if union > 0 else 0.0


def _area(inst, mode):
    if mode == "bbox":
        return inst.bbox.w * inst.bbox.h
    return float(_dense(inst).sum())


def brute_force_ap(preds, gts, cls, iou_thr, area_range, mode):
    """AP of one class at one threshold and area range, COCO rules, written out
    longhand.  Returns None when the class has no countable ground truth."""
    lo, hi = area_range
    images = sorted({p.image_id for p in preds if p.class_id == cls}
                    | {g.image_id for g in gts if g.class_id == cls})
    scored = []  # (score, global position, is_tp, ignored)
    n_gt = 0
    position = 0
    for image in images:
        p = [x for x in preds if x.image_id == image and x.class_id == cls]
        g = [x for x in gts if x.image_id == image and x.class_id == cls]
        p = sorted(p, key=lambda x: -x.score)  # stable
        g_ign = [not (lo <= _area(x, mode) <= hi) for x in g]
        g_order = [j for j in range(len(g)) if not g_ign[j]] + \
                  [j for j in range(len(g)) if g_ign[j]]
        n_gt += g_ign.count(False)
        taken = set()
        for d in p:
            best_iou = min(iou_thr, 1 - 1e-10)
            best = None
            for j in g_order:
                if j in taken:
                    continue
                if best is not None and not g_ign[best] and g_ign[j]:
                    break
                iou = _iou(d, g[j], mode)
                if iou >= best_iou:
                    best_iou, best = iou, j
            if best is not None:
                taken.add(best)
                ignored = g_ign[best]
            else:
                ignored = not (lo <= _area(d, mode) <= hi)
            scored.append((d.score, position, best is not None, ignored))
            position += 1
    if n_gt == 0:
        return None
    scored.sort(key=lambda t: (-t[0], t[1]))
    tp = fp = 0
    curve = []
    for _, _, is_tp, ignored in scored:
        if ignored:
            continue
        tp += is_tp
        fp += not is_tp
        curve.append((tp / n_gt, tp / (tp + fp)))
    total = 0.0
    # COCO's recall grid is np.linspace(0, 1, 101); k / 100 differs in the
    # last bit at 35, 41, ... and changes which recall counts as reached.
    for r in np.linspace(0.0, 1.0, 101):
        reachable = [prec for rec, prec in curve if rec >= r]
        total += max(reachable) if reachable else 0.0
    return total / 101


# ---------------------------------------------------------------- pycocotools


def coco_ap(preds, gts, classes, iou_thresholds, area_ranges, mode):
    """AP array ``[area, threshold, class]`` from pycocotools (nan = no gt)."""
    from pycocotools import mask as mask_utils
    from pycocotools.coco import COCO
    from pycocotools.cocoeval import COCOeval

    image_ids = sorted({x.image_id for x in preds} | {x.image_id for x in gts})
    img_num = {name: k + 1 for k, name in enumerate(image_ids)}
    cat_num = {c: k + 1 for k, c in enumerate(classes)}
    shapes = {}
    for x in list(gts) + list(preds):
        shapes[x.image_id] = (x.mask.height, x.mask.width)

    def rle(inst):
        enc = mask_utils.encode(np.asfortranarray(_dense(inst).astype(np.uint8)))
        enc["counts"] = enc["counts"].decode("ascii")
        return enc

    gt_doc = {
        "images": [{"id": img_num[i], "height": shapes[i][0], "width": shapes[i][1]}
                   for i in image_ids],
        "categories": [{"id": cat_num[c], "name": c} for c in classes],
        "annotations": [],
    }
    for k, g in enumerate(gts):
        gt_doc["annotations"].append({
            "id": k + 1, "image_id": img_num[g.image_id], "category_id": cat_num[g.class_id],
            "iscrowd": 0, "bbox": g.bbox.to_list(), "segmentation": rle(g),
            "area": _area(g, mode),
        })
    coco_gt = COCO()
    coco_gt.dataset = gt_doc
    coco_gt.createIndex()
    results = []
    for p in preds:
        entry = {"image_id": img_num[p.image_id], "category_id": cat_num[p.class_id],
                 "score": p.score}
        if mode == "bbox":
            entry["bbox"] = p.bbox.to_list()
        else:
            entry["segmentation"] = rle(p)
        results.append(entry)
    coco_dt = coco_gt.loadRes(results) if results else COCO()
    if not results:
        coco_dt.dataset = {"images": gt_doc["images"], "categories": gt_doc["categories"],
                           "annotations": []}
        coco_dt.createIndex()
    ev = COCOeval(coco_gt, coco_dt, "bbox" if mode == "bbox" else "segm")
    ev.params.imgIds = [img_num[i] for i in image_ids]
    ev.params.catIds = [cat_num[c] for c in classes]
    ev.params.iouThrs = np.asarray(iou_thresholds, dtype=np.float64)
    ev.params.areaRng = [list(v) for v in area_ranges.values()]
    ev.params.areaRngLbl = list(area_ranges)
    ev.params.maxDets = [1000]
    ev.evaluate()
    ev.accumulate()
    prec = ev.eval["precision"][:, :, :, :, 0]  # [thr, recall, class, area]
    out = np.full((len(area_ranges), len(iou_thresholds), len(classes)), np.nan)
    for a in range(len(area_ranges)):
        for t in range(len(iou_thresholds)):
            for k in range(len(classes)):
                col = prec[t, :, k, a]
                if np.all(col > -1):
                    out[a, t, k] = col.mean()
    return out


def random_micro_dataset(rng, size=128, max_images=5, max_preds=4, max_gts=3, classes=None):
    """Random rectangles, some perturbed copies of ground truth, with areas
    spread across the small, medium and large ranges."""
    from pointrefine.mask_geometry import DEFECT_CLASSES, MaskInstance

    classes = classes or DEFECT_CLASSES

    def rect(h0=None):
        h = int(rng.integers(4, size)) if h0 is None else h0[0]
        w = int(rng.integers(4, size)) if h0 is None else h0[1]
        y = int(rng.integers(0, size - h + 1))
        x = int(rng.integers(0, size - w + 1))
        m = np.zeros((size, size), dtype=bool)
        m[y:y + h, x:x + w] = True
        return m

    preds, gts = [], []
    n_images = int(rng.integers(1, max_images + 1))
    for i in range(n_images):
        image_id = f"im{i}"
        for cls in classes:
            g_masks = [rect() for _ in range(int(rng.integers(0, max_gts + 1)))]
            for m in g_masks:
                gts.append(MaskInstance.from_dense(image_id, cls, m, 1.0))
            for _ in range(int(rng.integers(0, max_preds + 1))):
                if g_masks and rng.random() < 0.7:
                    m = g_masks[int(rng.integers(len(g_masks)))].copy()
                    shift = rng.integers(-6, 7, size=2)
                    m = np.roll(m, tuple(int(s) for s in shift), axis=(0, 1))
                    if rng.random() < 0.5:
                        m[rng.random((size, size)) < 0.1] = False
                else:
                    m = rect()
                # Quantized scores create ties on purpose.
                score = float(rng.integers(1, 11)) / 10
                preds.append(MaskInstance.from_dense(image_id, cls, m, score))
    return preds, gts
