"""Synthetic line-space defect images with exact ground truth.

Each image shows bright vertical lines on a dark background with a single
defect drawn at ``defect_level`` (brighter than the lines by default, as
defect material tends to image in SEM; set it to ``line_level`` for defects
that only the coarse mask can separate from the lines):

* ``thin_bridge``: a 1-2 px tall connector across one space
* ``single_bridge``: a 3-5 px tall connector across one space
* ``line_collapse``: two neighbouring lines fused over a vertical span
  (the mask covers both lines and the filled gap)
* ``multi_bridge_horizontal``: one 3-5 px bar across two or three spaces,
  touching at least three lines
* ``multi_bridge_non_horizontal``: connectors in two or three consecutive
  spaces, each at a different height (staircase)

Alongside the image come a feature grid (intensity, horizontal and vertical
gradient) and a coarse logit grid made by block-averaging the true mask,
smoothing the labels and optionally adding noise.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from ..mask_geometry import DEFECT_CLASSES, MaskInstance
from .via import AnnotationSet, ImageInfo

__all__ = [
    "SynthConfig",
    "SyntheticSample",
    "SyntheticDataset",
    "TABLE1_COUNTS",
    "SPLITS",
    "split_counts",
    "image_features",
    "coarse_logits_from_mask",
    "generate_synthetic",
    "generate_sample",
]

SPLITS = ("train", "val", "test")

# Images per split and class of the reference SEM dataset (1160 images).
TABLE1_COUNTS = {
    "train": {"thin_bridge": 240, "single_bridge": 240, "multi_bridge_horizontal": 160,
              "multi_bridge_non_horizontal": 80, "line_collapse": 200},
    "val": {"thin_bridge": 30, "single_bridge": 30, "multi_bridge_horizontal": 20,
            "multi_bridge_non_horizontal": 10, "line_collapse": 30},
    "test": {"thin_bridge": 30, "single_bridge": 30, "multi_bridge_horizontal": 20,
             "multi_bridge_non_horizontal": 10, "line_collapse": 30},
}


def _largest_remainder(weights, total):
    weights = np.asarray(weights, dtype=np.float64)
    if total == 0 or weights.sum() == 0:
        return [0] * len(weights)
    exact = weights * total / weights.sum()
    counts = np.floor(exact).astype(int)
    # Stable sort keeps the earlier cell first on equal remainders.
    order = np.argsort(-(exact - counts), kind="stable")
    counts[order[: total - counts.sum()]] += 1
    return counts.tolist()


def split_counts(total=None, class_counts=None):
    """Images per split and class.

    With ``total`` the reference table is scaled proportionally (largest
    remainder).  With ``class_counts`` each class is split train/val/test in
    the reference ratio for that class.
    """
    cells = [(s, c) for s in SPLITS for c in DEFECT_CLASSES]
    if class_counts is not None:
        out = {s: {} for s in SPLITS}
        for c in DEFECT_CLASSES:
            n = int(class_counts.get(c, 0))
            if n < 0:
                raise ConfigError(f"negative count for {c}")
            parts = _largest_remainder([TABLE1_COUNTS[s][c] for s in SPLITS], n)
            for s, k in zip(SPLITS, parts):
                out[s][c] = k
        return out
    if total is None or total < 0:
        raise ConfigError("total must be a non-negative integer")
    parts = _largest_remainder([TABLE1_COUNTS[s][c] for s, c in cells], int(total))
    out = {s: {} for s in SPLITS}
    for (s, c), k in zip(cells, parts):
        out[s][c] = k
    return out


@dataclass(frozen=True)
class SynthConfig:
    image_size: int = 480
    line_pitch: int = 16
    line_width: int = 8
    noise_sigma: float = 0.05
    total: int = 116
    class_counts: dict | None = None
    coarse_steps: int = 3
    label_smoothing: float = 0.05
    corruption_sigma: float = 0.0
    line_level: float = 0.7
    space_level: float = 0.2
    defect_level: float = 0.95
    rng_seed: int = 0

    def __post_init__(self):
        if not 0 < self.line_width < self.line_pitch:
            raise ConfigError("need 0 < line_width < line_pitch")
        if self.noise_sigma < 0 or self.corruption_sigma < 0:
            raise ConfigError("noise levels must be non-negative")
        if not 0 <= self.label_smoothing < 1:
            raise ConfigError("label_smoothing must be in [0, 1)")
        if self.coarse_steps < 1 or self.image_size % (2 ** self.coarse_steps):
            raise ConfigError(
                f"image_size {self.image_size} is not divisible by 2**{self.coarse_steps}"
            )
        # Widest defect: a bar across three spaces needs four whole lines
        # clear of the one-pitch border margin.
        if self.image_size < 8 * self.line_pitch:
            raise ConfigError(
                f"image_size {self.image_size} too small for pitch {self.line_pitch}"
            )

    def counts(self):
        return split_counts(self.total, self.class_counts)


@dataclass
class SyntheticSample:
    image_id: str
    split: str
    class_id: str
    image: np.ndarray
    mask: np.ndarray
    features: np.ndarray
    coarse_logits: np.ndarray
    score: float
    rectangles: list = field(default_factory=list)

    @property
    def instance(self):
        return MaskInstance.from_dense(self.image_id, self.class_id, self.mask, 1.0)


@dataclass
class SyntheticDataset:
    config: SynthConfig
    samples: list

    @property
    def images(self):
        return {s.image_id: s.image for s in self.samples}

    @property
    def features(self):
        return {s.image_id: s.features for s in self.samples}

    @property
    def coarse_logits(self):
        return {s.image_id: s.coarse_logits for s in self.samples}

    @property
    def annotations(self):
        size = self.config.image_size
        return AnnotationSet({s.image_id: ImageInfo(size, size, f"images/{s.image_id}")
                              for s in self.samples},
                             [s.instance for s in self.samples])

    def split(self, name):
        return [s for s in self.samples if s.split == name]

    @property
    def splits(self):
        return {name: [s.image_id for s in self.split(name)] for name in SPLITS}


def image_features(image):
    """``(H, W, 3)`` grid: intensity in [0, 1] and its x and y gradients."""
    img = np.asarray(image, dtype=np.float64)
    scale = 65535.0 if np.asarray(image).dtype == np.uint16 else 255.0
    intensity = img / scale
    gy, gx = np.gradient(intensity)
    return np.stack([intensity, gx, gy], axis=2)


def coarse_logits_from_mask(mask, steps, smoothing=0.05, noise_sigma=0.0, rng=None):
    """Block-average the mask by ``2**steps``, smooth labels and map to logits."""
    f = 2 ** steps
    m = np.asarray(mask, dtype=np.float64)
    h, w = m.shape
    if h % f or w % f:
        raise ConfigError(f"mask {h}x{w} not divisible by {f}")
    p = m.reshape(h // f, f, w // f, f).mean(axis=(1, 3))
    p = p * (1.0 - smoothing) + smoothing / 2.0
    logits = np.log(p) - np.log1p(-p)
    if noise_sigma > 0:
        rng = rng if rng is not None else np.random.default_rng()
        logits = logits + rng.normal(0.0, noise_sigma, size=logits.shape)
    return logits


def _defect_rectangles(class_id, lines, size, margin, rng):
    """Rectangles ``(x0, y0, x1, y1)`` of the defect; the mask is their union.

    ``lines`` are the whole lines a defect may touch; rows stay ``margin``
    pixels clear of the top and bottom edges.
    """
    pitch = lines[1][0] - lines[0][0]

    def pick_space(n_spaces):
        return int(rng.integers(0, len(lines) - n_spaces))

    def pick_row(extent):
        return int(rng.integers(margin, size - margin - extent + 1))

    if class_id in ("thin_bridge", "single_bridge"):
        hb = int(rng.integers(1, 3)) if class_id == "thin_bridge" else int(rng.integers(3, 6))
        k = pick_space(1)
        y = pick_row(hb)
        return [(lines[k][1], y, lines[k + 1][0], y + hb)]
    if class_id == "line_collapse":
        span = int(rng.integers(pitch, 2 * pitch + 1))
        k = pick_space(1)
        y = pick_row(span)
        return [(lines[k][0], y, lines[k + 1][1], y + span)]
    if class_id == "multi_bridge_horizontal":
        m = int(rng.integers(2, 4))
        hb = int(rng.integers(3, 6))
        k = pick_space(m)
        y = pick_row(hb)
        return [(lines[k][1], y, lines[k + m][0], y + hb)]
    if class_id == "multi_bridge_non_horizontal":
        m = int(rng.integers(2, 4))
        hb = int(rng.integers(3, 6))
        step = int(rng.integers(hb + 2, 2 * hb + 3)) * (1 if rng.random() < 0.5 else -1)
        extent = (m - 1) * abs(step) + hb
        k = pick_space(m)
        y0 = pick_row(extent)
        if step < 0:
            y0 += extent - hb
        return [(lines[k + j][1], y0 + j * step, lines[k + j + 1][0], y0 + j * step + hb)
                for j in range(m)]
    raise ConfigError(f"unknown defect class {class_id!r}")


def generate_sample(cfg, image_id, split, class_id, rng):
    size = cfg.image_size
    phase = int(rng.integers(0, cfg.line_pitch))
    starts = np.arange(phase, size, cfg.line_pitch)
    # Defects keep one pitch away from every image edge.
    margin = cfg.line_pitch
    lines = [(int(x), int(x) + cfg.line_width) for x in starts
             if x >= margin and x + cfg.line_width <= size - margin]
    if len(lines) < 4:
        raise ConfigError("too few whole lines for a defect")

    clean = np.full((size, size), cfg.space_level)
    for x in starts:
        clean[:, x:x + cfg.line_width] = cfg.line_level
    rects = _defect_rectangles(class_id, lines, size, margin, rng)
    mask = np.zeros((size, size), dtype=bool)
    for x0, y0, x1, y1 in rects:
        mask[y0:y1, x0:x1] = True
    clean[mask] = cfg.defect_level
    noisy = clean + (rng.normal(0.0, cfg.noise_sigma, clean.shape) if cfg.noise_sigma > 0 else 0.0)
    image = np.round(np.clip(noisy, 0.0, 1.0) * 255.0).astype(np.uint8)

    logits = coarse_logits_from_mask(mask, cfg.coarse_steps, cfg.label_smoothing,
                                     cfg.corruption_sigma, rng)
    score = float(1.0 / (1.0 + math.exp(-float(logits.max()))))
    return SyntheticSample(image_id, split, class_id, image, mask, image_features(image),
                           logits, score, rects)


def generate_synthetic(cfg):
    """Generate the whole dataset; image ``i`` draws from its own seeded stream."""
    samples = []
    index = 0
    for split, per_class in cfg.counts().items():
        for class_id in DEFECT_CLASSES:
            for _ in range(per_class.get(class_id, 0)):
                rng = np.random.default_rng([cfg.rng_seed, index])
                samples.append(generate_sample(cfg, f"img_{index:05d}.pgm", split, class_id, rng))
                index += 1
    return SyntheticDataset(cfg, samples)
