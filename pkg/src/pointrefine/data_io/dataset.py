"""Dataset directories as written by ``pointrefine synth``::

    manifest.json            format version, generator config, split membership
    detections.json          one coarse detection per image (class, score, paths)
    images/<image_id>        8-bit PGM
    coarse/<stem>.npy        coarse mask logits (float64)
    annotations/<split>.json VIA project with the ground-truth polygons
"""

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ParseError
from .images import read_image, write_image
from .synthetic import SPLITS, image_features
from .via import export_via, load_via

__all__ = ["DatasetEntry", "DatasetDir", "write_dataset", "load_dataset", "MANIFEST_VERSION"]

MANIFEST_VERSION = 1


def _dump(obj):
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def write_dataset(dataset, out_dir):
    """Write a :class:`SyntheticDataset`; returns the relative paths written."""
    out = Path(out_dir)
    for sub in ("images", "coarse", "annotations"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    written = []
    detections = []
    for s in dataset.samples:
        stem = Path(s.image_id).stem
        image_rel = f"images/{s.image_id}"
        coarse_rel = f"coarse/{stem}.npy"
        write_image(out / image_rel, s.image)
        np.save(out / coarse_rel, np.ascontiguousarray(s.coarse_logits, dtype="<f8"))
        written += [image_rel, coarse_rel]
        detections.append({"image_id": s.image_id, "split": s.split, "class": s.class_id,
                           "score": s.score, "image": image_rel, "coarse": coarse_rel})
    annotations = dataset.annotations
    for split, ids in dataset.splits.items():
        rel = f"annotations/{split}.json"
        (out / rel).write_text(_dump(export_via(annotations.for_images(ids))))
        written.append(rel)
    (out / "detections.json").write_text(_dump(detections))
    manifest = {
        "format": "pointrefine-dataset",
        "version": MANIFEST_VERSION,
        "config": dataclasses.asdict(dataset.config),
        "splits": dataset.splits,
        "class_counts": dataset.config.counts(),
    }
    (out / "manifest.json").write_text(_dump(manifest))
    return sorted(written + ["detections.json", "manifest.json"])


@dataclass(frozen=True)
class DatasetEntry:
    root: Path
    image_id: str
    split: str
    class_id: str
    score: float
    image_rel: str
    coarse_rel: str

    def image(self):
        return read_image(self.root / self.image_rel)

    def features(self):
        return image_features(self.image())

    def coarse_logits(self):
        return np.load(self.root / self.coarse_rel)


class DatasetDir:
    def __init__(self, root):
        self.root = Path(root)
        try:
            self.manifest = json.loads((self.root / "manifest.json").read_text())
            detections = json.loads((self.root / "detections.json").read_text())
        except FileNotFoundError as exc:
            raise ParseError("not a dataset directory", str(exc.filename)) from None
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed JSON: {exc}", str(self.root)) from None
        if self.manifest.get("version") != MANIFEST_VERSION:
            raise ParseError(f"unsupported manifest version {self.manifest.get('version')}",
                             str(self.root / "manifest.json"))
        self.entries = [DatasetEntry(self.root, d["image_id"], d["split"], d["class"],
                                     float(d["score"]), d["image"], d["coarse"])
                        for d in detections]

    def split(self, name):
        if name not in SPLITS:
            raise ParseError(f"unknown split {name!r}")
        return [e for e in self.entries if e.split == name]

    def ground_truth(self, split):
        return load_via(self.root / "annotations" / f"{split}.json",
                        image_dir=self.root / "images")

    def files(self):
        return sorted(p for p in self.root.rglob("*") if p.is_file())


def load_dataset(root):
    return DatasetDir(root)
