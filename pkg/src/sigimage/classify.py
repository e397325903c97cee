"""Small image classifiers used to check that encodings separate classes."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .signal_core import SigImageError, SignalError

LUMA = np.array([0.299, 0.587, 0.114])


class ClassifierError(SigImageError, ValueError):
    pass


def _box_weights(n_in: int, n_out: int) -> np.ndarray:
    """(n_out, n_in) area-overlap weights; each row sums to one."""
    edges = np.arange(n_out + 1) * (n_in / n_out)
    lo, hi = edges[:-1, None], edges[1:, None]
    px = np.arange(n_in)[None, :]
    overlap = np.clip(np.minimum(hi, px + 1) - np.maximum(lo, px), 0.0, None)
    return overlap / overlap.sum(axis=1, keepdims=True)


def featurize(image: np.ndarray, side: int = 32) -> np.ndarray:
    """Box-filter to side x side grayscale, flattened row-major, in [0, 1]."""
    if side < 2:
        raise SignalError(f"feature side must be >= 2, got {side}")
    image = np.asarray(image)
    h, w = image.shape[:2]
    gray = image.astype(np.float64) @ LUMA / 255.0
    small = _box_weights(h, side) @ gray @ _box_weights(w, side).T
    return np.clip(small.ravel(), 0.0, 1.0)


def _distances(train: np.ndarray, query: np.ndarray) -> np.ndarray:
    diff = train - query[np.newaxis, :]
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def knn_predict(train_x: np.ndarray, train_y: Sequence[int], query: np.ndarray, k: int = 3) -> int:
    """Majority vote among the k nearest training vectors (Euclidean).

    Ties in the vote go to the label with the smallest summed distance, then
    to the lowest label.  Equidistant neighbours are ordered by label, so the
    result does not depend on training-set order.
    """
    train_x = np.asarray(train_x, dtype=np.float64)
    train_y = np.asarray(train_y, dtype=np.int64)
    if train_x.shape[0] == 0:
        raise ClassifierError("empty training set")
    if k < 1 or k % 2 == 0:
        raise ClassifierError(f"k must be a positive odd integer, got {k}")
    if k > train_x.shape[0]:
        raise ClassifierError(f"k={k} exceeds training set size {train_x.shape[0]}")
    d = _distances(train_x, np.asarray(query, dtype=np.float64))
    nearest = np.lexsort((train_y, d))[:k]
    labels, votes = np.unique(train_y[nearest], return_counts=True)
    best = votes.max()
    tied = labels[votes == best]
    if tied.size == 1:
        return int(tied[0])
    sums = np.array([d[nearest][train_y[nearest] == lab].sum() for lab in tied])
    return int(tied[np.flatnonzero(sums == sums.min())[0]])


def class_centroids(train_x: np.ndarray, train_y: Sequence[int], n_classes: int) -> np.ndarray:
    train_x = np.asarray(train_x, dtype=np.float64)
    train_y = np.asarray(train_y, dtype=np.int64)
    counts = np.bincount(train_y, minlength=n_classes)
    missing = np.flatnonzero(counts == 0)
    if missing.size:
        raise ClassifierError(f"no training vectors for classes {missing.tolist()}")
    return np.stack([train_x[train_y == c].mean(axis=0) for c in range(n_classes)])


def nearest_centroid(train_x, train_y, query, n_classes: int = None) -> int:
    train_y = np.asarray(train_y, dtype=np.int64)
    if n_classes is None:
        n_classes = int(train_y.max()) + 1
    centroids = class_centroids(train_x, train_y, n_classes)
    return int(np.argmin(_distances(centroids, np.asarray(query, dtype=np.float64))))


@dataclass
class EvalReport:
    label_names: List[str]
    confusion: np.ndarray  # rows: true class, columns: predicted class
    n_train: int

    @classmethod
    def from_predictions(cls, label_names, y_true, y_pred, n_train: int) -> "EvalReport":
        k = len(label_names)
        conf = np.zeros((k, k), dtype=np.int64)
        np.add.at(conf, (np.asarray(y_true, dtype=np.int64), np.asarray(y_pred, dtype=np.int64)), 1)
        return cls(list(label_names), conf, n_train)

    @property
    def n_test(self) -> int:
        return int(self.confusion.sum())

    @property
    def accuracy(self) -> float:
        total = self.confusion.sum()
        return float(np.trace(self.confusion) / total) if total else 0.0

    @property
    def per_class_accuracy(self) -> dict:
        out = {}
        for i, name in enumerate(self.label_names):
            support = self.confusion[i].sum()
            out[name] = float(self.confusion[i, i] / support) if support else None
        return out

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "per_class_accuracy": self.per_class_accuracy,
            "confusion_matrix": self.confusion.tolist(),
            "label_names": self.label_names,
            "n_train": self.n_train,
            "n_test": self.n_test,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def confusion_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["true\\pred"] + self.label_names)
        for name, row in zip(self.label_names, self.confusion):
            writer.writerow([name] + row.tolist())
        return buf.getvalue()

    def table(self) -> str:
        width = max(len(n) for n in self.label_names) if self.label_names else 5
        lines = [f"accuracy: {100 * self.accuracy:.2f}%  "
                 f"(train {self.n_train}, test {self.n_test})"]
        for name, acc in self.per_class_accuracy.items():
            val = "   n/a" if acc is None else f"{100 * acc:6.2f}%"
            lines.append(f"  {name:<{width}}  {val}")
        return "\n".join(lines)
