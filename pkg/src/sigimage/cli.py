"""Command line entry point: ``sigimage {synth,encode,dataset,augment,eval}``.

Settings resolve as built-in defaults, then ``--config FILE`` (a flat JSON
object keyed by option name with dashes replaced by underscores), then
explicit flags.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from . import __version__
from .augment import AugmentSpec, augment_batch, draw_params
from .ingest import load_manifest, load_sequence_csv
from .pipeline import PipelineConfig, build_dataset, evaluate
from .reduce_fuse import FUSE_POLICIES, TAU_BASES, ReductionConfig, reduce
from .render import EncodingConfig, encode_image, read_png, write_png
from .signal_core import RangeMode, SigImageError
from .synth import SynthSpec, generate, write_dataset

log = logging.getLogger("sigimage")

DEFAULTS: Dict[str, Any] = {
    # encoding
    "height": 256, "width": 256, "line_width": 1, "background": "0,0,0",
    "saturation": 1.0, "value": 1.0, "range_mode": "per_sequence",
    "range_min": None, "range_max": None, "gradient": True,
    # reduction / fusion
    "reduce": True, "tau_ratio": 0.2, "tau_basis": "max_sigma", "tau": None,
    "fuse_policy": "interpolate_to_max",
    # augmentation
    "aug_count": 0, "stretch_min": 0.8, "stretch_max": 1.2,
    "rotation_min": -10.0, "rotation_max": 10.0, "perspective_jitter": 0.05,
    # evaluation
    "k": 3, "classifier": "knn", "feature_side": 32, "confusion_csv": None, "table": False,
    # synthesis
    "classes": 6, "per_class": 40, "signals": 12, "length": 120, "noise": 0.05,
    "active_fraction": 0.5,
    # shared
    "seed": 0, "threads": 1,
}


class UsageError(Exception):
    pass


def _rgb(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected R,G,B, got {text!r}")
    try:
        return ",".join(str(int(p)) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers in R,G,B, got {text!r}") from None


def _add_encoding(p):
    g = p.add_argument_group("encoding")
    g.add_argument("--height", type=int, help="image height H (default 256)")
    g.add_argument("--width", type=int, help="image width W (default 256)")
    g.add_argument("--line-width", type=int, help="line width in pixels (default 1)")
    g.add_argument("--background", type=_rgb, help="background color R,G,B (default 0,0,0)")
    g.add_argument("--saturation", type=float, help="palette HSV saturation (default 1.0)")
    g.add_argument("--value", type=float, help="palette HSV value (default 1.0)")
    g.add_argument("--range-mode", choices=["per_sequence", "fixed"],
                   help="value range used for the vertical axis")
    g.add_argument("--range-min", type=float, help="lower bound for --range-mode fixed")
    g.add_argument("--range-max", type=float, help="upper bound for --range-mode fixed")
    g.add_argument("--gradient", action=argparse.BooleanOptionalAction,
                   help="white-to-color temporal gradient (default on)")


def _add_reduction(p):
    g = p.add_argument_group("reduction and fusion")
    g.add_argument("--reduce", action=argparse.BooleanOptionalAction,
                   help="zero low-variance signals (default on)")
    g.add_argument("--tau-ratio", type=float, help="threshold ratio (default 0.2)")
    g.add_argument("--tau-basis", choices=TAU_BASES, help="threshold basis (default max_sigma)")
    g.add_argument("--tau", type=float, help="fixed threshold, overrides --tau-ratio")
    g.add_argument("--fuse-policy", choices=FUSE_POLICIES,
                   help="length harmonization for multi-source entries")


def _add_augment(p):
    g = p.add_argument_group("augmentation")
    g.add_argument("--aug-count", type=int, help="augmented variants per train image (default 0)")
    g.add_argument("--stretch-min", type=float, help="min width stretch factor (default 0.8)")
    g.add_argument("--stretch-max", type=float, help="max width stretch factor (default 1.2)")
    g.add_argument("--rotation-min", type=float, help="min rotation in degrees (default -10)")
    g.add_argument("--rotation-max", type=float, help="max rotation in degrees (default 10)")
    g.add_argument("--perspective-jitter", type=float,
                   help="max corner displacement as a fraction of the frame (default 0.05)")


def _add_common(p, seed=True):
    p.add_argument("--config", type=Path, help="JSON file with option defaults")
    p.add_argument("--threads", type=int, help="worker processes for batch stages (default 1)")
    if seed:
        p.add_argument("--seed", type=int, help="random seed (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sigimage", argument_default=argparse.SUPPRESS,
        description="Encode multivariate sensor sequences as RGB images.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", default=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        return sub.add_parser(name, help=help_, description=help_,
                              argument_default=argparse.SUPPRESS)

    p = add("synth", "write a synthetic dataset (sequence CSVs + manifest.json)")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--classes", type=int, help="number of classes (default 6)")
    p.add_argument("--per-class", type=int, help="sequences per class (default 40)")
    p.add_argument("--signals", type=int, help="signals per sequence (default 12)")
    p.add_argument("--length", type=int, help="samples per sequence (default 120)")
    p.add_argument("--noise", type=float, help="noise standard deviation (default 0.05)")
    p.add_argument("--active-fraction", type=float,
                   help="fraction of signals carrying class content (default 0.5)")
    _add_common(p)

    p = add("encode", "encode one sequence CSV as a PNG")
    p.add_argument("input", type=Path)
    p.add_argument("--out", type=Path, required=True)
    _add_encoding(p)
    _add_reduction(p)
    _add_common(p, seed=False)

    p = add("dataset", "export a manifest as an image-folder dataset")
    p.add_argument("manifest", type=Path)
    p.add_argument("--out", type=Path, required=True)
    _add_encoding(p)
    _add_reduction(p)
    _add_augment(p)
    _add_common(p)

    p = add("augment", "write augmented variants of PNG images")
    p.add_argument("inputs", type=Path, nargs="+")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--background", type=_rgb, help="fill color R,G,B (default 0,0,0)")
    _add_augment(p)
    _add_common(p)

    p = add("eval", "encode a manifest and report nearest-neighbour accuracy")
    p.add_argument("manifest", type=Path)
    p.add_argument("--k", type=int, help="neighbours for k-NN (odd, default 3)")
    p.add_argument("--classifier", choices=["knn", "centroid"])
    p.add_argument("--feature-side", type=int, help="feature image side (default 32)")
    p.add_argument("--confusion-csv", type=Path, help="also write the confusion matrix here")
    p.add_argument("--table", action="store_true", help="print a summary table to stderr")
    _add_encoding(p)
    _add_reduction(p)
    _add_augment(p)
    _add_common(p)
    return parser


def resolve_settings(ns: argparse.Namespace) -> Dict[str, Any]:
    given = {k: v for k, v in vars(ns).items() if k not in ("config", "verbose")}
    settings = dict(DEFAULTS)
    config_path = getattr(ns, "config", None)
    if config_path is not None:
        try:
            data = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise UsageError(f"config file not found: {config_path}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"{config_path}: invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError(f"{config_path}: expected a JSON object")
        unknown = sorted(set(data) - set(DEFAULTS))
        if unknown:
            raise UsageError(f"{config_path}: unknown option(s): {', '.join(unknown)}")
        settings.update(data)
    settings.update(given)
    return settings


def encoding_config(s: Dict[str, Any]) -> EncodingConfig:
    if s["range_mode"] == "fixed":
        if s["range_min"] is None or s["range_max"] is None:
            raise UsageError("--range-mode fixed needs --range-min and --range-max")
        range_mode = RangeMode.fixed(s["range_min"], s["range_max"])
    else:
        range_mode = RangeMode()
    bg = s["background"]
    if isinstance(bg, str):
        bg = [int(c) for c in bg.split(",")]
    return EncodingConfig(
        height=s["height"], width=s["width"], line_width=s["line_width"],
        background=tuple(bg), saturation=s["saturation"], value=s["value"],
        range_mode=range_mode, gradient=bool(s["gradient"]))


def reduction_config(s: Dict[str, Any]) -> ReductionConfig:
    return ReductionConfig(tau_ratio=s["tau_ratio"], tau_basis=s["tau_basis"],
                           enabled=bool(s["reduce"]), tau=s["tau"])


def augment_spec(s: Dict[str, Any]) -> AugmentSpec:
    return AugmentSpec(
        width_stretch_range=(s["stretch_min"], s["stretch_max"]),
        rotation_range_deg=(s["rotation_min"], s["rotation_max"]),
        perspective_jitter=s["perspective_jitter"], count_per_image=s["aug_count"],
        seed=s["seed"])


def pipeline_config(s: Dict[str, Any]) -> PipelineConfig:
    return PipelineConfig(
        reduction=reduction_config(s), fuse_policy=s["fuse_policy"],
        encoding=encoding_config(s), augment=augment_spec(s),
        feature_side=s["feature_side"], k=s["k"], classifier=s["classifier"],
        workers=s["threads"])


def synth_spec(s: Dict[str, Any]) -> SynthSpec:
    return SynthSpec(n_classes=s["classes"], sequences_per_class=s["per_class"],
                     n_signals=s["signals"], length=s["length"], noise_sigma=s["noise"],
                     active_fraction=s["active_fraction"], seed=s["seed"])


def _cmd_synth(s, spec: SynthSpec):
    records, manifest = generate(spec)
    path = write_dataset(records, manifest, s["out"])
    log.info("wrote %d sequences and %s", len(records), path)


def _cmd_encode(s, cfg: PipelineConfig):
    matrix = reduce(load_sequence_csv(s["input"]), cfg.reduction)
    write_png(encode_image(matrix, cfg.encoding), s["out"])
    log.info("wrote %s", s["out"])


def _cmd_dataset(s, cfg: PipelineConfig):
    inventory = build_dataset(load_manifest(s["manifest"]), s["out"], cfg)
    log.info("wrote %d images to %s", len(inventory["files"]), s["out"])


def _cmd_augment(s, cfg: PipelineConfig):
    spec = cfg.augment
    images = [read_png(p) for p in s["inputs"]]
    out_dir = Path(s["out"])
    augmented = augment_batch(images, spec, cfg.encoding.background, cfg.workers)
    written = []
    for idx, path in enumerate(s["inputs"]):
        for v in range(spec.count_per_image):
            target = out_dir / f"{Path(path).stem}.aug{v}.png"
            write_png(augmented[idx * spec.count_per_image + v], target)
            written.append({"file": str(target), "source": str(path), "variant": v,
                            **draw_params(spec, idx, v).to_dict()})
    print(json.dumps(written, indent=2))


def _cmd_eval(s, cfg: PipelineConfig):
    report = evaluate(load_manifest(s["manifest"]), cfg)
    print(report.to_json())
    if s["confusion_csv"]:
        Path(s["confusion_csv"]).write_text(report.confusion_csv(), encoding="utf-8")
    if s["table"]:
        print(report.table(), file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)  # exits 2 on usage errors
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        s = resolve_settings(ns)
        cfg = synth_spec(s) if ns.command == "synth" else pipeline_config(s)
    except (UsageError, SigImageError, TypeError) as exc:
        parser.error(str(exc))
    try:
        if ns.command == "synth":
            _cmd_synth(s, cfg)
        elif ns.command == "encode":
            _cmd_encode(s, cfg)
        elif ns.command == "dataset":
            _cmd_dataset(s, cfg)
        elif ns.command == "augment":
            _cmd_augment(s, cfg)
        elif ns.command == "eval":
            _cmd_eval(s, cfg)
    except (SigImageError, OSError) as exc:
        print(f"sigimage: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
