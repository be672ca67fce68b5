"""
COCO-style AP, relative gains and mask-area statistics
======================================================

Score baseline and refined predictions on a synthetic test split, print the
per-class AP table, the comparison with relative gains, and area statistics.
"""

from pointrefine.data_io import SynthConfig, generate_synthetic
from pointrefine.evaluation import (EvalConfig, evaluate, format_ap_table, format_comparison,
                                    relative_improvement)
from pointrefine.mask_geometry import MaskInstance
from pointrefine.pipeline import fit_head, refine_sample
from pointrefine.point_head import TrainConfig
from pointrefine.renderer import RenderConfig
from pointrefine.stats import area_statistics, format_stats_table

steps = 3
dataset = generate_synthetic(SynthConfig(image_size=128, total=232, coarse_steps=steps,
                                         rng_seed=1))
render = RenderConfig(steps)
train = [(s.coarse_logits, s.features, s.mask) for s in dataset.split("train")]
head = fit_head(train, TrainConfig(0.1, 128, 3000, 1), render, num_points=512,
                rollout_rounds=1, seed=1)

# predictions keep the detector's score; only the mask differs
test = dataset.split("test")
ground_truth = [s.instance for s in test]
baseline, refined = [], []
for s in test:
    for points, out in ((0, baseline), (None, refined)):
        cfg = RenderConfig(steps, points)
        _, mask = refine_sample(s.coarse_logits, s.features, head, cfg)
        out.append(MaskInstance.from_dense(s.image_id, s.class_id, mask, s.score))

reports = {}
for name, preds in (("baseline", baseline), ("refined", refined)):
    reports[name] = {mode: evaluate(preds, ground_truth, EvalConfig(mode=mode))
                     for mode in ("bbox", "segmentation")}
    r = reports[name]
    print(f"\n{name}")
    print(format_ap_table(r["bbox"].per_class(), r["segmentation"].per_class(),
                          r["bbox"].map, r["segmentation"].map))

# at 128 px every defect is under 32**2 pixels, so the medium and large rows stay empty
summaries = [{m: rep.summary() for m, rep in reports[n].items()} for n in ("baseline", "refined")]
print(format_comparison(*summaries, "bilinear", "refined"))

# the gain is a plain percentage change; the reference totals give 11.8 and 13.8
print("bbox total gain", relative_improvement(0.584, 0.653), "%")
print("segm total gain", relative_improvement(0.542, 0.617), "%")

# area statistics of what a downstream user would keep (score >= 0.5)
print()
print(format_stats_table(area_statistics(refined, min_score=0.5)))
