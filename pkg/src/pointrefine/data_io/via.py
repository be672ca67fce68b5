"""VGG Image Annotator (VIA) project files.

Both the full project layout (``_via_img_metadata``) and the bare annotation
export are accepted, with regions as a list (VIA 2) or a keyed dict (VIA 1).
Every region must be a polygon.  Regions sharing an ``instance`` attribute in
one file are merged into a single instance; otherwise each region is its own.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ParseError, UnsupportedShapeError
from ..mask_geometry import (CLASS_DISPLAY_NAMES, MaskInstance, normalize_class_name,
                             polygon_to_mask, rle_decode)
from .images import read_image

__all__ = ["ImageInfo", "AnnotationSet", "parse_via", "load_via", "export_via",
           "mask_to_rectangles"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ImageInfo:
    height: int
    width: int
    path: str = ""


@dataclass
class AnnotationSet:
    images: dict = field(default_factory=dict)
    instances: list = field(default_factory=list)

    def __post_init__(self):
        for inst in self.instances:
            if inst.image_id not in self.images:
                raise ParseError(f"instance refers to unknown image {inst.image_id!r}")
            info = self.images[inst.image_id]
            if (inst.mask.height, inst.mask.width) != (info.height, info.width):
                raise ParseError(f"mask size does not match image {inst.image_id!r}")

    def for_images(self, image_ids):
        keep = set(image_ids)
        return AnnotationSet({k: v for k, v in self.images.items() if k in keep},
                             [i for i in self.instances if i.image_id in keep])


def _entries(doc):
    if not isinstance(doc, dict):
        raise ParseError("VIA document must be a JSON object")
    meta = doc.get("_via_img_metadata", doc)
    if not isinstance(meta, dict):
        raise ParseError("_via_img_metadata must be an object")
    return {k: v for k, v in meta.items() if not k.startswith("_via")}


def _class_value(raw):
    if isinstance(raw, dict):
        picked = [k for k, v in raw.items() if v]
        return picked[0] if len(picked) == 1 else None
    return raw


def _image_shape(filename, entry, image_shapes, image_dir, default_shape, where):
    attrs = entry.get("file_attributes") or {}
    if "height" in attrs and "width" in attrs:
        return int(attrs["height"]), int(attrs["width"])
    if image_shapes and filename in image_shapes:
        return tuple(int(v) for v in image_shapes[filename])
    if image_dir is not None:
        path = Path(image_dir) / filename
        if path.exists():
            return read_image(path).shape
    if default_shape is not None:
        return tuple(default_shape)
    raise ParseError(f"cannot determine the size of image {filename!r}", where)


def parse_via(doc, image_shapes=None, image_dir=None, default_shape=None,
              class_key="class", strict=True, source=None):
    """Build an :class:`AnnotationSet` from a parsed VIA JSON document.

    Image sizes come from ``file_attributes`` height/width, then
    ``image_shapes``, then the image file under ``image_dir``, then
    ``default_shape``.
    """
    images, instances = {}, []
    for key, entry in _entries(doc).items():
        where = f"{source or '<via>'}[{key}]"
        if not isinstance(entry, dict) or "filename" not in entry:
            raise ParseError("file entry lacks 'filename'", where)
        filename = entry["filename"]
        h, w = _image_shape(filename, entry, image_shapes, image_dir, default_shape, where)
        images[filename] = ImageInfo(h, w, str(Path(image_dir) / filename) if image_dir else filename)

        regions = entry.get("regions", [])
        if isinstance(regions, dict):
            regions = [regions[k] for k in sorted(regions, key=lambda s: int(s) if str(s).isdigit() else s)]
        groups = {}
        for n, region in enumerate(regions):
            rwhere = f"{where}.regions[{n}]"
            shape = region.get("shape_attributes") or {}
            if shape.get("name") != "polygon":
                raise UnsupportedShapeError(f"unsupported region shape {shape.get('name')!r}", rwhere)
            try:
                xs, ys = shape["all_points_x"], shape["all_points_y"]
            except KeyError as exc:
                raise ParseError(f"polygon lacks {exc.args[0]}", rwhere) from None
            attrs = region.get("region_attributes") or {}
            raw = _class_value(attrs.get(class_key))
            class_id = normalize_class_name(raw) if raw is not None else None
            if class_id is None:
                if strict:
                    raise ParseError(f"unknown class {raw!r} under key {class_key!r}", rwhere)
                log.warning("%s: skipping region with unknown class %r", rwhere, raw)
                continue
            group = str(attrs["instance"]) if "instance" in attrs else f"#{n}"
            dense = rle_decode(polygon_to_mask(xs, ys, h, w))
            if group in groups:
                prev_class, prev = groups[group]
                if prev_class != class_id:
                    raise ParseError(f"instance {group!r} mixes classes", rwhere)
                groups[group] = (class_id, prev | dense)
            else:
                groups[group] = (class_id, dense)
        for class_id, dense in groups.values():
            instances.append(MaskInstance.from_dense(filename, class_id, dense, score=1.0))
    return AnnotationSet(images, instances)


def load_via(path, **kwargs):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc}", str(path)) from None
    kwargs.setdefault("source", str(path))
    return parse_via(doc, **kwargs)


def mask_to_rectangles(dense):
    """Cover a mask exactly with axis-aligned ``(x0, y0, x1, y1)`` pixel rectangles."""
    dense = np.asarray(dense, dtype=bool)
    done, open_rects = [], {}
    for col in range(dense.shape[1] + 1):
        runs = set()
        if col < dense.shape[1]:
            column = np.concatenate([[False], dense[:, col], [False]])
            edges = np.flatnonzero(column[1:] != column[:-1])
            runs = set(zip(edges[0::2].tolist(), edges[1::2].tolist()))
        for run in list(open_rects):
            if run not in runs:
                done.append((open_rects.pop(run), run[0], col, run[1]))
        for run in runs:
            open_rects.setdefault(run, col)
    return sorted(done, key=lambda r: (r[0], r[1]))


def export_via(annotations, class_key="class"):
    """VIA project document whose polygons rasterize back to the same masks."""
    metadata = {}
    for image_id, info in annotations.images.items():
        metadata[f"{image_id}-1"] = {
            "filename": image_id,
            "size": -1,
            "regions": [],
            "file_attributes": {"height": info.height, "width": info.width},
        }
    counters = {}
    for inst in annotations.instances:
        entry = metadata[f"{inst.image_id}-1"]
        k = counters.get(inst.image_id, 0)
        counters[inst.image_id] = k + 1
        for x0, y0, x1, y1 in mask_to_rectangles(rle_decode(inst.mask)):
            entry["regions"].append({
                "shape_attributes": {
                    "name": "polygon",
                    "all_points_x": [x0, x1, x1, x0],
                    "all_points_y": [y0, y0, y1, y1],
                },
                "region_attributes": {class_key: CLASS_DISPLAY_NAMES[inst.class_id],
                                      "instance": str(k)},
            })
    return {
        "_via_settings": {"project": {"name": "pointrefine"}},
        "_via_img_metadata": metadata,
        "_via_attributes": {"region": {class_key: {"type": "text"}, "instance": {"type": "text"}},
                            "file": {"height": {"type": "text"}, "width": {"type": "text"}}},
    }
