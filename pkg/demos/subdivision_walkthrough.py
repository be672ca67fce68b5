"""
One subdivision step, cell by cell
==================================

A coarse 4x4 logit grid for a diagonal edge is upsampled, the most uncertain
cells are picked, and a point head overwrites only those cells.
"""

import numpy as np

from pointrefine.grid import upsample2x
from pointrefine.point_head import init_params
from pointrefine.renderer import RenderConfig, RenderTrace, refine
from pointrefine.sampling import select_top_uncertain, uncertainty_from_logits

np.set_printoptions(precision=2, suppress=True, linewidth=120)

# a diagonal edge: positive logits below the anti-diagonal
yy, xx = np.mgrid[0:4, 0:4]
coarse = (xx + yy - 3.0) * 2.0
print("coarse logits\n", coarse)

# bilinear 2x upsampling keeps the zero crossing on the diagonal
fine = upsample2x(coarse)
print("\nupsampled\n", fine)

# uncertainty peaks where |logit| is smallest; take the 8 most uncertain cells
u = uncertainty_from_logits(fine)
points = select_top_uncertain(u, 8)
marks = np.full(fine.shape, ".")
for x, y in points:
    marks[int(y * fine.shape[0]), int(x * fine.shape[1])] = "#"
print("\ncells sent to the point head")
print("\n".join(" ".join(row) for row in marks))

# features here are random; the coarse logit is always appended by the renderer
rng = np.random.default_rng(0)
features = rng.normal(size=(8, 8, 3))
head = init_params(1 + features.shape[2], hidden=(16, 16), seed=0)

trace = RenderTrace()
out = refine(coarse, features, head, RenderConfig(1, 8), trace)
changed = out != fine
print(f"\nhead evaluations: {trace.head_evaluations}, cells changed: {changed.sum()}")
print("refined\n", out)
