"""Sequence CSV and dataset manifest I/O.

Sequence CSV: one file per sequence, header of signal names, then one row per
time sample.  Manifest JSON::

    {
      "label_names": ["circle", "up"],
      "entries": [
        {"path": "seq/a.csv", "label": "up", "split": "train",
         "sensor": {"kind": "skeleton", "joints": 25, "coords": 3},
         "sequence_id": "a"},
        {"sources": [{"path": "p1.csv", "sensor": {"kind": "skeleton"}},
                     {"path": "p2.csv", "sensor": {"kind": "skeleton"}}],
         "label": 0, "split": "test", "sequence_id": "pair"}
      ]
    }

An entry with ``sources`` lists several files (two performers, or two sensor
modalities) that are fused into one sequence.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np

from .signal_core import SensorDescriptor, SigImageError, SignalError, SignalMatrix

log = logging.getLogger(__name__)

SPLITS = ("train", "test")
_AXES = "xyz"


class ParseError(SigImageError, ValueError):
    """Malformed sequence file."""


class ManifestError(SigImageError, ValueError):
    """Malformed or inconsistent dataset manifest."""


def parse_sequence_csv(text: str, source: str = "<string>",
                       expected_signals: Optional[int] = None) -> SignalMatrix:
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError(f"{source}: missing header line")
    header = next(csv.reader([lines[0]]))
    names = [h.strip() for h in header]
    n = len(names)
    if expected_signals is not None and n != expected_signals:
        raise SignalError(f"{source}: expected {expected_signals} signals, found {n}")
    rows: List[List[float]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != n:
            raise ParseError(
                f"{source}: line {lineno}: expected {n} fields, got {len(cells)}"
            )
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise ParseError(f"{source}: line {lineno}: non-numeric value in {line!r}") from None
    if not rows:
        raise ParseError(f"{source}: no data rows")
    try:
        return SignalMatrix(np.array(rows).T, names)
    except SignalError as exc:
        raise ParseError(f"{source}: {exc}") from None


def load_sequence_csv(path, expected_signals: Optional[int] = None) -> SignalMatrix:
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        text = fh.read()
    return parse_sequence_csv(text, str(path), expected_signals)


def format_sequence_csv(matrix: SignalMatrix) -> str:
    for name in matrix.names:
        # the reader splits on line breaks and strips header cells
        if name != name.strip() or "\n" in name or "\r" in name:
            raise SignalError(f"signal name {name!r} would not survive a CSV round trip")
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow(matrix.names)
    for col in matrix.values.T:
        buf.write(",".join("%.17g" % v for v in col) + "\n")
    return buf.getvalue()


def _default_mode() -> int:
    umask = os.umask(0)
    os.umask(umask)
    return 0o666 & ~umask


def atomic_write_bytes(path, data: bytes) -> None:
    """Write via a temp file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.chmod(tmp, _default_mode())  # mkstemp creates 0600
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_sequence_csv(matrix: SignalMatrix, path) -> None:
    atomic_write_bytes(path, format_sequence_csv(matrix).encode("utf-8"))


def flatten_skeleton(frames: Any, joint_names: Optional[Sequence[str]] = None) -> SignalMatrix:
    """Flatten M x J x C skeleton frames into J*C signals, joint-major.

    Signal ``j*C + c`` holds coordinate ``c`` of joint ``j``; names are
    ``"<joint>.<axis>"``.
    """
    frames = list(frames)
    if not frames:
        raise SignalError("empty signal")
    shape = None
    for t, frame in enumerate(frames):
        fshape = np.shape(frame)
        if len(fshape) != 2:
            raise SignalError(f"frame {t}: expected J x C values, got shape {fshape}")
        if shape is None:
            shape = fshape
        elif fshape != shape:
            raise SignalError(f"frame {t}: shape {fshape} differs from first frame {shape}")
    n_joints, n_coords = shape
    if n_joints < 1 or n_coords not in (2, 3):
        raise SignalError(f"unsupported skeleton layout {n_joints} joints x {n_coords} coords")
    if joint_names is None:
        joint_names = [f"j{j}" for j in range(n_joints)]
    if len(joint_names) != n_joints:
        raise SignalError(f"expected {n_joints} joint names, got {len(joint_names)}")
    arr = np.asarray(frames, dtype=np.float64)  # (M, J, C)
    values = arr.reshape(arr.shape[0], n_joints * n_coords).T
    names = [f"{jn}.{_AXES[c]}" for jn in joint_names for c in range(n_coords)]
    return SignalMatrix(values, names)


@dataclass(frozen=True)
class Source:
    path: Path
    sensor: SensorDescriptor = field(default_factory=SensorDescriptor)


@dataclass(frozen=True)
class ManifestEntry:
    sources: Tuple[Source, ...]
    label: int
    split: str
    sequence_id: str

    @property
    def path(self) -> Path:
        return self.sources[0].path

    @property
    def sensor(self) -> SensorDescriptor:
        return self.sources[0].sensor


@dataclass(frozen=True)
class DatasetManifest:
    label_names: Tuple[str, ...]
    entries: Tuple[ManifestEntry, ...]
    root: Path = Path(".")

    def split(self, name: str) -> List[ManifestEntry]:
        return [e for e in self.entries if e.split == name]

    def to_dict(self, root=None) -> dict:
        """JSON form with paths relative to ``root`` (default: the manifest's own root)."""
        root = Path(root) if root is not None else self.root

        def rel(p: Path) -> str:
            try:
                return Path(os.path.relpath(p, root)).as_posix()
            except ValueError:
                return str(p)

        entries = []
        for e in self.entries:
            item: dict = {}
            if len(e.sources) == 1:
                item["path"] = rel(e.path)
                item["sensor"] = e.sensor.to_dict()
            else:
                item["sources"] = [
                    {"path": rel(s.path), "sensor": s.sensor.to_dict()} for s in e.sources
                ]
            item.update(label=self.label_names[e.label], split=e.split,
                        sequence_id=e.sequence_id)
            entries.append(item)
        return {"label_names": list(self.label_names), "entries": entries}


def _resolve_label(raw: Any, label_names: Sequence[str], where: str) -> int:
    if isinstance(raw, bool):
        raise ManifestError(f"{where}: invalid label {raw!r}")
    if isinstance(raw, int):
        if not 0 <= raw < len(label_names):
            raise ManifestError(
                f"{where}: label index {raw} out of range for {len(label_names)} classes"
            )
        return raw
    if isinstance(raw, str):
        try:
            return list(label_names).index(raw)
        except ValueError:
            raise ManifestError(
                f"{where}: unknown label {raw!r}; valid names: {', '.join(label_names)}"
            ) from None
    raise ManifestError(f"{where}: invalid label {raw!r}")


_ENTRY_KEYS = {"path", "sources", "label", "split", "sensor", "sequence_id"}


def parse_manifest(data: Any, root=".", source: str = "<manifest>") -> DatasetManifest:
    root = Path(root)
    if not isinstance(data, dict):
        raise ManifestError(f"{source}: top level must be a JSON object")
    for key in set(data) - {"label_names", "entries"}:
        log.warning("%s: ignoring unknown field %r", source, key)
    label_names = data.get("label_names")
    if not isinstance(label_names, list) or not all(isinstance(s, str) for s in label_names):
        raise ManifestError(f"{source}: label_names must be an array of strings")
    if len(set(label_names)) != len(label_names):
        raise ManifestError(f"{source}: duplicate class names in label_names")
    raw_entries = data.get("entries", [])
    if not isinstance(raw_entries, list):
        raise ManifestError(f"{source}: entries must be an array")

    seen_paths: set = set()
    seen_ids: set = set()
    entries = []
    for i, raw in enumerate(raw_entries):
        where = f"{source}: entry {i}"
        if not isinstance(raw, dict):
            raise ManifestError(f"{where}: must be an object")
        for key in set(raw) - _ENTRY_KEYS:
            log.warning("%s: ignoring unknown field %r", where, key)
        if "sources" in raw:
            raw_sources = raw["sources"]
            if not isinstance(raw_sources, list) or not raw_sources:
                raise ManifestError(f"{where}: sources must be a non-empty array")
        elif "path" in raw:
            raw_sources = [{"path": raw["path"], "sensor": raw.get("sensor")}]
        else:
            raise ManifestError(f"{where}: missing path")
        sources = []
        for rs in raw_sources:
            if not isinstance(rs, dict) or not isinstance(rs.get("path"), str):
                raise ManifestError(f"{where}: each source needs a string path")
            path = (root / rs["path"]).resolve()
            if path in seen_paths:
                raise ManifestError(f"{where}: duplicate path {rs['path']!r}")
            seen_paths.add(path)
            try:
                sensor = SensorDescriptor.from_dict(rs.get("sensor"))
            except SignalError as exc:
                raise ManifestError(f"{where}: {exc}") from None
            sources.append(Source(path, sensor))
        split = raw.get("split")
        if split not in SPLITS:
            raise ManifestError(
                f"{where}: unknown split {split!r} (expected one of {', '.join(SPLITS)})"
            )
        label = _resolve_label(raw.get("label"), label_names, where)
        seq_id = raw.get("sequence_id")
        if not isinstance(seq_id, str) or not seq_id:
            raise ManifestError(f"{where}: sequence_id must be a non-empty string")
        if seq_id in seen_ids:
            raise ManifestError(f"{where}: duplicate sequence_id {seq_id!r}")
        seen_ids.add(seq_id)
        entries.append(ManifestEntry(tuple(sources), label, split, seq_id))
    return DatasetManifest(tuple(label_names), tuple(entries), root.resolve())


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{path}: invalid JSON: {exc}") from None
    return parse_manifest(data, path.parent, str(path))


def write_manifest(manifest: DatasetManifest, path) -> None:
    path = Path(path)
    text = json.dumps(manifest.to_dict(path.parent.resolve()), indent=2) + "\n"
    atomic_write_bytes(path, text.encode("utf-8"))
