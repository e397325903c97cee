"""Synthetic labelled sequences with known class structure.

Class ``y`` is carried by sinusoids completing ``y + 1`` cycles over the
sequence.  The active signals of one sequence share a random phase and are
spread evenly around the cycle; the remaining signals are Gaussian noise.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import List, Tuple

import numpy as np

from .ingest import (DatasetManifest, ManifestEntry, Source, write_manifest,
                     write_sequence_csv)
from .signal_core import SensorDescriptor, SequenceRecord, SignalError, SignalMatrix


@dataclass(frozen=True)
class SynthSpec:
    n_classes: int = 6
    sequences_per_class: int = 40
    n_signals: int = 12
    length: int = 120
    noise_sigma: float = 0.05
    active_fraction: float = 0.5
    amplitude: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_classes < 2:
            raise SignalError("n_classes must be >= 2")
        if self.sequences_per_class < 1:
            raise SignalError("sequences_per_class must be >= 1")
        if self.n_signals < 1:
            raise SignalError("n_signals must be >= 1")
        if self.length < 2:
            raise SignalError("length must be >= 2")
        if self.noise_sigma < 0:
            raise SignalError("noise_sigma must be non-negative")
        if not 0 < self.active_fraction <= 1:
            raise SignalError("active_fraction must be in (0, 1]")

    @property
    def n_active(self) -> int:
        return max(1, math.ceil(self.active_fraction * self.n_signals - 1e-9))

    def to_dict(self) -> dict:
        return asdict(self)


def class_frequency(label: int, length: int) -> float:
    """Cycles per sample for class ``label``."""
    return (label + 1) / length


def _sequence(spec: SynthSpec, label: int, rng: np.random.Generator) -> np.ndarray:
    t = np.arange(spec.length, dtype=np.float64)
    values = np.zeros((spec.n_signals, spec.length))
    phase = rng.uniform(0.0, 2 * np.pi)
    k = spec.n_active
    offsets = 2 * np.pi * np.arange(k) / k
    freq = class_frequency(label, spec.length)
    values[:k] = spec.amplitude * np.sin(2 * np.pi * freq * t[None, :] + phase + offsets[:, None])
    if spec.noise_sigma > 0:
        values += rng.normal(0.0, spec.noise_sigma, size=values.shape)
    return values


def generate(spec: SynthSpec = SynthSpec()) -> Tuple[List[SequenceRecord], DatasetManifest]:
    """Records in class-major order plus a manifest with a stratified 80/20 split.

    Manifest paths are relative (``sequences/<id>.csv``); :func:`write_dataset`
    materializes them.
    """
    names = [f"sig{j:02d}" for j in range(spec.n_signals)]
    label_names = [f"class_{y}" for y in range(spec.n_classes)]
    n_train = math.ceil(0.8 * spec.sequences_per_class - 1e-9)
    records, entries = [], []
    for y in range(spec.n_classes):
        rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(y,)))
        train_mask = np.zeros(spec.sequences_per_class, dtype=bool)
        train_mask[rng.permutation(spec.sequences_per_class)[:n_train]] = True
        for i in range(spec.sequences_per_class):
            seq_id = f"{label_names[y]}_{i:03d}"
            matrix = SignalMatrix(_sequence(spec, y, rng), names)
            records.append(SequenceRecord(matrix, y, seq_id, SensorDescriptor()))
            entries.append(ManifestEntry(
                (Source(Path("sequences") / f"{seq_id}.csv"),), y,
                "train" if train_mask[i] else "test", seq_id))
    return records, DatasetManifest(tuple(label_names), tuple(entries), Path("."))


def write_dataset(records: List[SequenceRecord], manifest: DatasetManifest, out_dir) -> Path:
    """Write sequence CSVs and ``manifest.json`` under ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for rec, entry in zip(records, manifest.entries):
        write_sequence_csv(rec.matrix, out_dir / entry.path)
    # entries hold paths relative to out_dir; to_dict relativizes against root
    rooted = DatasetManifest(
        manifest.label_names,
        tuple(ManifestEntry(tuple(Source(out_dir / s.path, s.sensor) for s in e.sources),
                            e.label, e.split, e.sequence_id) for e in manifest.entries),
        out_dir)
    path = out_dir / "manifest.json"
    write_manifest(rooted, path)
    return path
