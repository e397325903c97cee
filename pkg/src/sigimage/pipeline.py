"""End-to-end pipeline: manifest entries to images, image-folder export, evaluation."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, List, Sequence

import numpy as np

from .augment import AugmentSpec, apply_params, draw_params
from .classify import ClassifierError, EvalReport, featurize, knn_predict, nearest_centroid
from .ingest import DatasetManifest, ManifestEntry, atomic_write_bytes, load_sequence_csv
from .reduce_fuse import FUSE_POLICIES, ReductionConfig, reduce, reduce_then_fuse
from .render import EncodingConfig, encode_image, write_png
from .signal_core import SignalError, SignalMatrix


@dataclass(frozen=True)
class PipelineConfig:
    reduction: ReductionConfig = field(default_factory=ReductionConfig)
    fuse_policy: str = "interpolate_to_max"
    encoding: EncodingConfig = field(default_factory=EncodingConfig)
    augment: AugmentSpec = field(default_factory=AugmentSpec)
    feature_side: int = 32
    k: int = 3
    classifier: str = "knn"
    workers: int = 1

    def __post_init__(self):
        if self.fuse_policy not in FUSE_POLICIES:
            raise SignalError(f"unknown fuse policy {self.fuse_policy!r}")
        if self.classifier not in ("knn", "centroid"):
            raise SignalError(f"unknown classifier {self.classifier!r}")
        if self.k < 1 or self.k % 2 == 0:
            raise SignalError(f"k must be a positive odd integer, got {self.k}")
        if self.feature_side < 2:
            raise SignalError(f"feature side must be >= 2, got {self.feature_side}")
        if self.workers < 1:
            raise SignalError("workers must be >= 1")


def _map(fn: Callable, items: Sequence, workers: int) -> list:
    """Order-preserving map, fanned out over processes when workers > 1."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


def load_entry(entry: ManifestEntry, config: PipelineConfig = PipelineConfig()) -> SignalMatrix:
    """Load, reduce and (for multi-source entries) fuse one manifest entry."""
    matrices = []
    for src in entry.sources:
        m = load_sequence_csv(src.path)
        try:
            src.sensor.check(m.n_signals)
        except SignalError as exc:
            raise SignalError(f"{src.path}: {exc}") from None
        matrices.append(m)
    if len(matrices) == 1:
        return reduce(matrices[0], config.reduction)
    tags = [f"{s.sensor.kind.value}{i}" for i, s in enumerate(entry.sources)]
    return reduce_then_fuse(matrices, config.reduction, config.fuse_policy, tags)


def _encode_job(args):
    matrix, encoding = args
    return encode_image(matrix, encoding)


def encode_many(matrices: Sequence[SignalMatrix], encoding: EncodingConfig = EncodingConfig(),
                workers: int = 1) -> List[np.ndarray]:
    return _map(_encode_job, [(m, encoding) for m in matrices], workers)


def _augmented(image: np.ndarray, spec: AugmentSpec, index: int, background):
    for v in range(spec.count_per_image):
        params = draw_params(spec, index, v)
        yield v, params, apply_params(image, params, background)


def _export_job(args):
    index, entry, label_name, out_dir, config = args
    image = encode_image(load_entry(entry, config), config.encoding)
    base = Path(out_dir) / entry.split / label_name
    records = []
    path = base / f"{entry.sequence_id}.png"
    write_png(image, path)
    sources = [str(s.path) for s in entry.sources]
    records.append({"file": path.relative_to(out_dir).as_posix(), "sequence_id": entry.sequence_id,
                    "split": entry.split, "label": label_name, "sources": sources,
                    "augmentation": None})
    if entry.split == "train":
        for v, params, aug in _augmented(image, config.augment, index, config.encoding.background):
            path = base / f"{entry.sequence_id}.aug{v}.png"
            write_png(aug, path)
            records.append({"file": path.relative_to(out_dir).as_posix(),
                            "sequence_id": entry.sequence_id, "split": entry.split,
                            "label": label_name, "sources": sources,
                            "augmentation": {"variant": v, **params.to_dict()}})
    return records


def build_dataset(manifest: DatasetManifest, out_dir, config: PipelineConfig = PipelineConfig()) -> dict:
    """Export ``<split>/<class>/<id>.png`` (plus ``.augN.png`` for train) and
    ``inventory.json``.  Returns the inventory."""
    out_dir = Path(out_dir).resolve()
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(i, e, manifest.label_names[e.label], out_dir, config)
            for i, e in enumerate(manifest.entries)]
    files = [rec for group in _map(_export_job, jobs, config.workers) for rec in group]
    inventory = {
        "label_names": list(manifest.label_names),
        "encoding": config.encoding.to_dict(),
        "reduction": config.reduction.to_dict(),
        "fuse_policy": config.fuse_policy,
        "augment": config.augment.to_dict(),
        "files": files,
    }
    atomic_write_bytes(out_dir / "inventory.json",
                       (json.dumps(inventory, indent=2) + "\n").encode("utf-8"))
    return inventory


def _feature_job(args):
    index, entry, config, augment = args
    image = encode_image(load_entry(entry, config), config.encoding)
    feats = [featurize(image, config.feature_side)]
    if augment:
        feats += [featurize(aug, config.feature_side)
                  for _, _, aug in _augmented(image, config.augment, index,
                                              config.encoding.background)]
    return feats


def predict(train_x: np.ndarray, train_y: np.ndarray, queries: Iterable[np.ndarray],
            config: PipelineConfig, n_classes: int) -> List[int]:
    if config.classifier == "knn":
        return [knn_predict(train_x, train_y, q, config.k) for q in queries]
    return [nearest_centroid(train_x, train_y, q, n_classes) for q in queries]


def evaluate(manifest: DatasetManifest, config: PipelineConfig = PipelineConfig()) -> EvalReport:
    """Fit on the train split (augmented if configured) and score the test split."""
    indexed = list(enumerate(manifest.entries))
    train = [(i, e) for i, e in indexed if e.split == "train"]
    test = [(i, e) for i, e in indexed if e.split == "test"]
    if not test:
        raise ClassifierError("manifest has no test entries")
    if not train:
        raise ClassifierError("manifest has no train entries")
    jobs = [(i, e, config, True) for i, e in train] + [(i, e, config, False) for i, e in test]
    feats = _map(_feature_job, jobs, config.workers)
    train_feats, test_feats = feats[:len(train)], feats[len(train):]
    train_x = np.stack([f for group in train_feats for f in group])
    train_y = np.array([e.label for (_, e), group in zip(train, train_feats) for _ in group])
    # the predictor only ever sees test features; labels are joined afterwards
    y_pred = predict(train_x, train_y, (g[0] for g in test_feats), config, len(manifest.label_names))
    y_true = [e.label for _, e in test]
    return EvalReport.from_predictions(manifest.label_names, y_true, y_pred, len(train))
