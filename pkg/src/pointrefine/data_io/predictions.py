"""Prediction files: a JSON array of
``{"image_id", "class", "score", "bbox": [x, y, w, h], "mask": {"size", "counts"}}``.

Output is canonical (sorted keys, one instance per line, shortest round-trip
float repr) so re-saving a loaded file reproduces it byte for byte.
"""

import json
from pathlib import Path

from ..errors import CorruptMaskError, InvalidInputError, ParseError
from ..mask_geometry import BBox, BinaryMask, MaskInstance

__all__ = ["instance_to_json", "instance_from_json", "dumps_predictions",
           "loads_predictions", "save_predictions", "load_predictions"]

_FIELDS = ("image_id", "class", "score", "bbox", "mask")


def instance_to_json(inst):
    return {
        "image_id": inst.image_id,
        "class": inst.class_id,
        "score": float(inst.score),
        "bbox": [float(v) for v in inst.bbox.to_list()],
        "mask": inst.mask.to_json(),
    }


def instance_from_json(obj, where="[0]"):
    if not isinstance(obj, dict):
        raise ParseError("instance must be an object", where)
    for key in _FIELDS:
        if key not in obj:
            raise ParseError(f"missing field '{key}'", where)
    try:
        bbox = BBox(*[float(v) for v in obj["bbox"]])
    except (TypeError, ValueError, InvalidInputError) as exc:
        raise ParseError(f"field 'bbox' invalid: {exc}", where) from None
    mask_obj = obj["mask"]
    try:
        mask = BinaryMask.from_json(mask_obj)
    except (KeyError, TypeError, ValueError, CorruptMaskError) as exc:
        raise ParseError(f"field 'mask' invalid: {exc}", where) from None
    if not isinstance(obj["score"], (int, float)) or isinstance(obj["score"], bool):
        raise ParseError("field 'score' must be a number", where)
    try:
        return MaskInstance(str(obj["image_id"]), obj["class"], float(obj["score"]), bbox, mask)
    except InvalidInputError as exc:
        field = "class" if "class" in str(exc) else "score"
        raise ParseError(f"field '{field}' invalid: {exc}", where) from None


def dumps_predictions(instances):
    lines = [json.dumps(instance_to_json(i), sort_keys=True, separators=(",", ":"))
             for i in instances]
    if not lines:
        return "[]\n"
    return "[\n" + ",\n".join(lines) + "\n]\n"


def loads_predictions(text, source="<predictions>"):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc}", source) from None
    if not isinstance(doc, list):
        raise ParseError("predictions must be a JSON array", source)
    return [instance_from_json(obj, f"{source}[{n}]") for n, obj in enumerate(doc)]


def save_predictions(path, instances):
    Path(path).write_text(dumps_predictions(instances))


def load_predictions(path):
    return loads_predictions(Path(path).read_text(), str(path))
