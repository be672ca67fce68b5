"""``pointrefine`` command line: synth, train-head, refine, eval, stats, report.

Option values resolve as built-in default < config file (``--config``, JSON
or TOML) < environment variable ``POINTREFINE_<OPTION>`` < command-line
flag.  Config files hold top-level keys shared by all commands plus optional
per-command tables, e.g. ``{"seed": 3, "train-head": {"steps": 800}}``.

Every command writing files stages them in a temporary sibling directory and
renames it into place only on success, with a ``run.json`` manifest.
"""

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import shutil
import sys
import tempfile
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__
from .data_io import SynthConfig, generate_synthetic, load_dataset, load_via, write_dataset
from .data_io.predictions import load_predictions, save_predictions
from .errors import ConfigError, ParseError, TrainingDivergedError
from .evaluation import (APReport, EvalConfig, evaluate,
                         format_ap_table, format_comparison)
from .grid import upsample2x
from .mask_geometry import DEFECT_CLASSES, MaskInstance, rle_decode
from .pipeline import fit_head, point_training_set, refine_sample
from .point_head import (DEFAULT_HIDDEN, TrainConfig, init_params, load_params, loss_and_grad,
                         save_params)
from .renderer import RenderConfig
from .stats import area_statistics, boxplot_series, format_stats_table

log = logging.getLogger("pointrefine")

ENV_PREFIX = "POINTREFINE_"
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_DIVERGED = 3


class CliError(Exception):
    def __init__(self, message, code=EXIT_FAILURE):
        super().__init__(message)
        self.code = code


# ------------------------------------------------------------------ parsing


def _int_list(text):
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    return tuple(int(v) for v in str(text).replace(" ", "").split(",") if v)


def _thresholds(text):
    """``"0.5:0.95:0.05"`` (inclusive range) or ``"0.5,0.75"``."""
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    text = str(text).strip()
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        n = int(round((stop - start) / step)) + 1
        return tuple(np.round(start + step * np.arange(n), 10).tolist())
    return tuple(float(v) for v in text.split(","))


def _class_counts(text):
    if isinstance(text, dict):
        return {str(k): int(v) for k, v in text.items()}
    out = {}
    for part in str(text).split(","):
        if part.strip():
            name, _, value = part.partition("=")
            out[name.strip()] = int(value)
    return out


def _bool(value):
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _optional_int(value):
    return None if value in (None, "", "none") else int(value)


class Option:
    def __init__(self, flag, type=str, default=None, help="", required=False, is_flag=False,
                 metavar=None):
        self.flag = flag
        self.dest = flag.lstrip("-").replace("-", "_")
        self.type = type
        self.default = default
        self.help = help
        self.required = required
        self.is_flag = is_flag
        self.metavar = metavar

    def add_to(self, parser):
        shown = "" if self.default is None else f" (default: {self.default})"
        if self.is_flag:
            parser.add_argument(self.flag, dest=self.dest, action="store_const", const=True,
                                default=None, help=self.help + shown)
        else:
            parser.add_argument(self.flag, dest=self.dest, default=None, metavar=self.metavar,
                                help=self.help + shown + (" [required]" if self.required else ""))


COMMON = [
    Option("--config", Path, None, "JSON or TOML file with option values"),
    Option("--seed", int, 0, "seed for every random choice"),
    Option("--force", _bool, False, "replace a non-empty output directory", is_flag=True),
]

COMMANDS = {
    "synth": ("generate a synthetic line-space defect dataset", [
        Option("--out", Path, None, "output dataset directory", required=True),
        Option("--total", int, 116, "images across all splits, split in reference proportions"),
        Option("--class-counts", _class_counts, None,
               "per-class totals instead of --total, e.g. thin_bridge=10,line_collapse=4"),
        Option("--image-size", int, 480, "image side in pixels"),
        Option("--line-pitch", int, 16, "line pitch in pixels"),
        Option("--line-width", int, 8, "line width in pixels"),
        Option("--noise-sigma", float, 0.05, "Gaussian image noise (intensity units)"),
        Option("--coarse-steps", int, 3, "coarse masks are 2**steps times smaller"),
        Option("--label-smoothing", float, 0.05, "label smoothing before the logit map"),
        Option("--corruption-sigma", float, 0.0, "Gaussian noise added to coarse logits"),
    ]),
    "train-head": ("train a point head on a dataset's ground-truth masks", [
        Option("--data", Path, None, "dataset directory", required=True),
        Option("--out", Path, None, "output directory for head.bin and loss.csv",
               required=True),
        Option("--split", str, "train", "split to train on"),
        Option("--probe-split", str, "val", "split whose points measure the probe loss"),
        Option("--steps", int, 5000, "SGD steps per training round"),
        Option("--lr", float, 0.00025, "learning rate"),
        Option("--batch", int, 2, "mini-batch size"),
        Option("--points", int, 196, "training points per image"),
        Option("--oversample", float, 3.0, "candidate oversampling factor k"),
        Option("--importance", float, 0.75, "share of points taken by uncertainty, beta"),
        Option("--hidden", _int_list, ",".join(map(str, DEFAULT_HIDDEN)), "hidden layer widths"),
        Option("--rollout-rounds", int, 1,
               "extra rounds on points queried while refining the training images"),
        Option("--render-points", _optional_int, None,
               "points per subdivision step in rollout rounds (default: out_width**2/16)"),
    ]),
    "refine": ("refine a split's coarse masks with a trained point head", [
        Option("--data", Path, None, "dataset directory", required=True),
        Option("--head", Path, None, "point head parameter file", required=True),
        Option("--out", Path, None, "output directory for predictions.json", required=True),
        Option("--split", str, "test", "split to refine"),
        Option("--points", _optional_int, None,
               "points per subdivision step (default: out_width**2/16; 0 = bilinear only)"),
        Option("--subdivision-steps", _optional_int, None,
               "subdivision steps (default: image size / coarse size)"),
        Option("--threshold", float, 0.5, "foreground probability threshold"),
    ]),
    "eval": ("COCO-style AP of predictions against ground truth", [
        Option("--pred", Path, None, "prediction JSON", required=True),
        Option("--out", Path, None, "output directory for report.json and ap_table.txt",
               required=True),
        Option("--data", Path, None, "dataset directory holding the ground truth"),
        Option("--split", str, "test", "dataset split used as ground truth"),
        Option("--gt", Path, None, "VIA project file with the ground truth (instead of --data)"),
        Option("--image-dir", Path, None, "directory of the images named in --gt"),
        Option("--class-key", str, "class", "VIA region attribute holding the class"),
        Option("--iou-thresholds", _thresholds, "0.5:0.95:0.05",
               "start:stop:step or comma list"),
        Option("--max-detections", _optional_int, None, "keep this many detections per image"),
        Option("--lenient", _bool, False, "skip unknown classes instead of failing",
               is_flag=True),
    ]),
    "stats": ("per-class mask area statistics of predictions", [
        Option("--pred", Path, None, "prediction JSON", required=True),
        Option("--out", Path, None, "output directory", required=True),
        Option("--min-score", float, 0.5, "drop predictions scoring below this"),
    ]),
    "report": ("compare two eval reports with relative improvements", [
        Option("--baseline", Path, None, "baseline report.json", required=True),
        Option("--improved", Path, None, "improved report.json", required=True),
        Option("--baseline-name", str, "baseline", "column label"),
        Option("--improved-name", str, "improved", "column label"),
        Option("--out", Path, None, "optional output directory for comparison.txt"),
    ]),
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pointrefine",
        description="Point-based mask refinement, COCO-style evaluation and mask statistics.",
        epilog=f"Every option can also be set in --config or as {ENV_PREFIX}<OPTION> "
               f"(e.g. {ENV_PREFIX}SEED=7, {ENV_PREFIX}LR=0.01).")
    parser.add_argument("--version", action="version", version=f"pointrefine {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    for name, (text, options) in COMMANDS.items():
        p = sub.add_parser(name, help=text, description=text)
        for opt in COMMON + options:
            opt.add_to(p)
    return parser


def _load_config(path):
    if path is None:
        return {}
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc.strerror}", EXIT_USAGE) from None
    try:
        if path.suffix.lower() == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib
            return tomllib.loads(text)
        return json.loads(text)
    except ValueError as exc:
        raise CliError(f"{path}: malformed config: {exc}", EXIT_USAGE) from None


def _config_values(config, command, options):
    known = {o.dest for o in options}
    values = {}
    sections = {name.replace("-", "_") for name in COMMANDS}
    for key, value in config.items():
        norm = key.replace("-", "_")
        if isinstance(value, dict) and norm in sections:
            continue
        if norm not in known and norm not in {o.dest for name in COMMANDS
                                              for o in COMMANDS[name][1] + COMMON}:
            raise CliError(f"unknown config key {key!r}", EXIT_USAGE)
        if norm in known:
            values[norm] = value
    for key, section in config.items():
        if key.replace("-", "_") == command.replace("-", "_") and isinstance(section, dict):
            for k, value in section.items():
                norm = k.replace("-", "_")
                if norm not in known:
                    raise CliError(f"unknown config key {command}.{k}", EXIT_USAGE)
                values[norm] = value
    return values


def resolve_options(args, environ=None):
    """Merge defaults, config file, environment and flags into one dict."""
    environ = os.environ if environ is None else environ
    options = COMMON + COMMANDS[args.command][1]
    config_path = args.config
    if config_path is None and environ.get(ENV_PREFIX + "CONFIG"):
        config_path = environ[ENV_PREFIX + "CONFIG"]
    from_config = _config_values(_load_config(config_path), args.command, options)
    resolved = {}
    for opt in options:
        raw, source = opt.default, "default"
        if opt.dest in from_config:
            raw, source = from_config[opt.dest], "config"
        env_key = ENV_PREFIX + opt.dest.upper()
        if env_key in environ:
            raw, source = environ[env_key], env_key
        flag_value = getattr(args, opt.dest)
        if flag_value is not None:
            raw, source = flag_value, opt.flag
        if raw is None:
            if opt.required:
                raise CliError(f"{args.command}: {opt.flag} is required", EXIT_USAGE)
            resolved[opt.dest] = None
            continue
        try:
            resolved[opt.dest] = opt.type(raw)
        except (TypeError, ValueError) as exc:
            raise CliError(f"invalid value for {opt.flag} from {source}: {raw!r} ({exc})",
                           EXIT_USAGE) from None
    resolved["config"] = str(config_path) if config_path else None
    return resolved


# ------------------------------------------------------------------ outputs


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def tree_digest(root, exclude=("run.json",)):
    """Hash of a directory: relative paths and file hashes, sorted."""
    root = Path(root)
    h = hashlib.sha256()
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        rel = path.relative_to(root).as_posix()
        if rel in exclude:
            continue
        h.update(rel.encode() + b"\0" + _sha256(path).encode() + b"\n")
    return h.hexdigest()


def _input_hash(path):
    path = Path(path)
    return tree_digest(path) if path.is_dir() else _sha256(path)


@contextmanager
def staged_output(out, force):
    """Yield a temporary directory that replaces ``out`` only on success."""
    out = Path(out)
    if out.exists() and not out.is_dir():
        raise CliError(f"{out} exists and is not a directory")
    if out.exists() and any(out.iterdir()) and not force:
        raise CliError(f"{out} is not empty; pass --force to replace it")
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=out.parent))
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    tmp.chmod(0o755)
    if out.exists():
        shutil.rmtree(out)
    os.replace(tmp, out)


def _write_manifest(stage, command, opts, inputs, started, extra=None):
    outputs = {}
    for path in sorted(p for p in stage.rglob("*") if p.is_file()):
        outputs[path.relative_to(stage).as_posix()] = _sha256(path)
    manifest = {
        "command": command,
        "argv": sys.argv[1:],
        "config": {k: _jsonable(v) for k, v in sorted(opts.items())},
        "seed": opts.get("seed"),
        "version": __version__,
        "inputs": {str(k): _input_hash(v) for k, v in inputs.items() if v is not None},
        "outputs": outputs,
        "wall_time_s": round(time.time() - started, 3),
    }
    if extra:
        manifest.update(extra)
    (stage / "run.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")


def _jsonable(v):
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, tuple):
        return list(v)
    return v


def _dump_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True, allow_nan=False) + "\n")


def _finite(obj):
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, float) and math.isnan(obj):
        return None
    return obj


# ------------------------------------------------------------------ commands


def cmd_synth(opts, started):
    try:
        cfg = SynthConfig(image_size=opts["image_size"], line_pitch=opts["line_pitch"],
                          line_width=opts["line_width"], noise_sigma=opts["noise_sigma"],
                          total=opts["total"], class_counts=opts["class_counts"],
                          coarse_steps=opts["coarse_steps"],
                          label_smoothing=opts["label_smoothing"],
                          corruption_sigma=opts["corruption_sigma"], rng_seed=opts["seed"])
    except ConfigError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    dataset = generate_synthetic(cfg)
    with staged_output(opts["out"], opts["force"]) as stage:
        write_dataset(dataset, stage)
        _write_manifest(stage, "synth", opts, {}, started)
    counts = {s: sum(v.values()) for s, v in cfg.counts().items()}
    print(f"wrote {len(dataset.samples)} images to {opts['out']} "
          + " ".join(f"{s}={n}" for s, n in counts.items()))


def _training_triples(dataset, split):
    """``(coarse, features, mask)`` per detection, paired with its gt by image and class."""
    entries = dataset.split(split)
    if not entries:
        return []
    gt = dataset.ground_truth(split)
    by_key = {}
    for inst in gt.instances:
        by_key.setdefault((inst.image_id, inst.class_id), []).append(rle_decode(inst.mask))
    out = []
    for e in entries:
        candidates = by_key.get((e.image_id, e.class_id))
        if not candidates:
            log.warning("no ground truth for %s (%s); skipped", e.image_id, e.class_id)
            continue
        coarse = e.coarse_logits()
        feats = e.features()
        mask = candidates[0]
        if len(candidates) > 1:
            up = coarse
            while up.shape[0] < mask.shape[0]:
                up = upsample2x(up)
            coarse_mask = up >= 0
            mask = max(candidates, key=lambda m: (m & coarse_mask).sum() / max((m | coarse_mask).sum(), 1))
        out.append((coarse, feats, mask))
    return out


def _steps_between(coarse_shape, image_shape):
    ratio = image_shape[0] / coarse_shape[0]
    steps = int(round(math.log2(ratio))) if ratio >= 1 else -1
    if steps < 1 or coarse_shape[0] * 2 ** steps != image_shape[0] \
            or coarse_shape[1] * 2 ** steps != image_shape[1]:
        raise CliError(f"coarse grid {coarse_shape} does not divide image {image_shape} by a "
                       "power of two", EXIT_USAGE)
    return steps


def cmd_train_head(opts, started):
    dataset = _open_dataset(opts["data"])
    triples = _training_triples(dataset, opts["split"])
    if not triples:
        raise CliError(f"split {opts['split']!r} of {opts['data']} has no training images")
    steps = _steps_between(triples[0][0].shape, triples[0][2].shape)
    seed = opts["seed"]
    cfg = TrainConfig(opts["lr"], opts["batch"], opts["steps"], seed)
    render = RenderConfig(steps, opts["render_points"])
    probe = _training_triples(dataset, opts["probe_split"]) or triples
    probe_x, probe_y = point_training_set(probe, opts["points"], opts["oversample"],
                                          opts["importance"], seed + 1)
    initial = init_params(probe_x.shape[1], opts["hidden"], seed=seed)
    initial_loss = loss_and_grad(initial, probe_x, probe_y)[0]

    with staged_output(opts["out"], opts["force"]) as stage:
        with open(stage / "loss.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["round", "step", "loss"])

            def on_step(rnd, step, _params, loss):
                writer.writerow([rnd, step, repr(float(loss))])

            try:
                head = fit_head(triples, cfg, render, hidden=opts["hidden"],
                                num_points=opts["points"], oversample_factor=opts["oversample"],
                                importance_ratio=opts["importance"],
                                rollout_rounds=opts["rollout_rounds"], seed=seed,
                                on_step=on_step)
            except TrainingDivergedError as exc:
                raise CliError(f"training diverged at step {exc.step} (loss {exc.loss})",
                               EXIT_DIVERGED) from None
        save_params(head, stage / "head.bin")
        final_loss = loss_and_grad(head, probe_x, probe_y)[0]
        _write_manifest(stage, "train-head", opts, {"data": opts["data"]}, started,
                        {"probe_loss": {"initial": initial_loss, "final": final_loss},
                         "subdivision_steps": steps})
    print(f"probe loss {initial_loss:.6f} -> {final_loss:.6f}; head written to "
          f"{opts['out'] / 'head.bin'}")


def cmd_refine(opts, started):
    dataset = _open_dataset(opts["data"])
    try:
        head = load_params(opts["head"])
    except OSError as exc:
        raise CliError(f"cannot read {opts['head']}: {exc.strerror}") from None
    entries = dataset.split(opts["split"])
    preds = []
    for e in entries:
        coarse, feats = e.coarse_logits(), e.features()
        steps = _steps_between(coarse.shape, feats.shape[:2])
        if opts["subdivision_steps"] not in (None, steps):
            raise CliError(f"--subdivision-steps {opts['subdivision_steps']} would not reach "
                           f"the image size; the data needs {steps}", EXIT_USAGE)
        if head.input_size != 1 + feats.shape[2]:
            raise CliError(f"head expects {head.input_size} inputs but the data gives "
                           f"1 + {feats.shape[2]}", EXIT_USAGE)
        try:
            render = RenderConfig(steps, opts["points"], opts["threshold"])
            _, mask = refine_sample(coarse, feats, head, render)
        except ValueError as exc:
            raise CliError(str(exc), EXIT_USAGE) from None
        preds.append(MaskInstance.from_dense(e.image_id, e.class_id, mask, e.score))
    with staged_output(opts["out"], opts["force"]) as stage:
        save_predictions(stage / "predictions.json", preds)
        _write_manifest(stage, "refine", opts, {"data": opts["data"], "head": opts["head"]},
                        started)
    print(f"refined {len(preds)} instances -> {opts['out'] / 'predictions.json'}")


def _ground_truth(opts):
    if opts["gt"] is not None:
        return load_via(opts["gt"], image_dir=opts["image_dir"], class_key=opts["class_key"],
                        strict=not opts["lenient"]).instances
    if opts["data"] is None:
        raise CliError("eval needs --data or --gt", EXIT_USAGE)
    return _open_dataset(opts["data"]).ground_truth(opts["split"]).instances


def cmd_eval(opts, started):
    preds = load_predictions(opts["pred"])
    gts = _ground_truth(opts)
    reports = {}
    for mode in ("bbox", "segmentation"):
        try:
            cfg = EvalConfig(opts["iou_thresholds"], mode=mode,
                             max_detections=opts["max_detections"], strict=not opts["lenient"])
            reports[mode] = evaluate(preds, gts, cfg)
        except ValueError as exc:
            raise CliError(str(exc), EXIT_USAGE) from None
    table = format_ap_table(reports["bbox"].per_class(), reports["segmentation"].per_class(),
                            reports["bbox"].map, reports["segmentation"].map)
    summary = _summary_table(reports)
    with staged_output(opts["out"], opts["force"]) as stage:
        _dump_json(stage / "report.json", {m: r.to_dict() for m, r in reports.items()})
        (stage / "ap_table.txt").write_text(table + "\n" + summary)
        _write_manifest(stage, "eval", opts, {"pred": opts["pred"], "data": opts["data"],
                                              "gt": opts["gt"]}, started)
    sys.stdout.write(table + "\n" + summary)


def _summary_table(reports, classes=None):
    rows = [("", "BBox", "Segmentation")]
    labels = {"map": "IOU 0.5:0.95", "ap50": "IOU 0.5", "ap75": "IOU 0.75",
              "map_medium": "Medium area", "map_large": "Large area"}
    b, s = reports["bbox"].summary(classes), reports["segmentation"].summary(classes)
    for key, label in labels.items():
        rows.append((label, _fmt(b.get(key)), _fmt(s.get(key))))
    width = max(len(r[0]) for r in rows)
    lines = [f"{r[0].ljust(width)}  {r[1]:>6}  {r[2]:>12}".rstrip() for r in rows]
    return "\n".join(lines) + "\n"


def _fmt(v):
    return "-" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.3f}"


def cmd_stats(opts, started):
    preds = load_predictions(opts["pred"])
    try:
        stats = area_statistics(preds, min_score=opts["min_score"])
    except ValueError as exc:
        raise CliError(f"no predictions with score >= {opts['min_score']}: {exc}") from None
    table = format_stats_table(stats)
    with staged_output(opts["out"], opts["force"]) as stage:
        (stage / "stats.txt").write_text(table)
        _dump_json(stage / "stats.json", [s.to_dict() for s in stats])
        _dump_json(stage / "boxplot.json", boxplot_series(stats))
        _write_manifest(stage, "stats", opts, {"pred": opts["pred"]}, started)
    sys.stdout.write(table)


def _load_report(path):
    try:
        doc = json.loads(Path(path).read_text())
        return {mode: APReport.from_dict(doc[mode]) for mode in ("bbox", "segmentation")}
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None
    except (ValueError, KeyError, TypeError) as exc:
        raise CliError(f"{path}: not an eval report ({exc})") from None


def cmd_report(opts, started):
    base = _load_report(opts["baseline"])
    better = _load_report(opts["improved"])
    classes = None
    for mode in ("bbox", "segmentation"):
        a, b = set(base[mode].per_class()), set(better[mode].per_class())
        if a != b:
            shared = a & b
            log.warning("%s class sets differ (only baseline: %s; only improved: %s); "
                        "comparing the %d shared classes", mode, sorted(a - b) or "-",
                        sorted(b - a) or "-", len(shared))
            print(f"warning: {mode} class sets differ; using the intersection "
                  f"({', '.join(sorted(shared)) or 'none'})", file=sys.stderr)
            classes = shared if classes is None else classes & shared
    summaries = [{m: _finite(r[m].summary(classes)) for m in r} for r in (base, better)]
    text = format_comparison(summaries[0], summaries[1], opts["baseline_name"],
                             opts["improved_name"])
    if opts["out"] is not None:
        with staged_output(opts["out"], opts["force"]) as stage:
            (stage / "comparison.txt").write_text(text)
            _dump_json(stage / "comparison.json",
                       {"baseline": summaries[0], "improved": summaries[1],
                        "classes": sorted(classes) if classes is not None
                        else list(DEFECT_CLASSES)})
            _write_manifest(stage, "report", opts,
                            {"baseline": opts["baseline"], "improved": opts["improved"]},
                            started)
    sys.stdout.write(text)


def _open_dataset(path):
    return load_dataset(path)


HANDLERS = {
    "synth": cmd_synth,
    "train-head": cmd_train_head,
    "refine": cmd_refine,
    "eval": cmd_eval,
    "stats": cmd_stats,
    "report": cmd_report,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = time.time()
    try:
        opts = resolve_options(args)
        HANDLERS[args.command](opts, started)
    except CliError as exc:
        print(f"pointrefine {args.command}: error: {exc}", file=sys.stderr)
        return exc.code
    except (ParseError, ValueError, OSError) as exc:
        print(f"pointrefine {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return 0


if __name__ == "__main__":
    sys.exit(main())
