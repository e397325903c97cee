"""Core signal containers and numeric primitives.

A :class:`SignalMatrix` stores N named signals of common length M as an
``(N, M)`` float64 array, signals as rows and time samples as columns.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence, Tuple

import numpy as np


class SigImageError(Exception):
    """Base class for all errors raised by this package."""


class SignalError(SigImageError, ValueError):
    """Invalid signal data or shape."""


def _readonly(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class SignalMatrix:
    values: np.ndarray
    names: Tuple[str, ...]

    def __init__(self, values: Any, names: Optional[Sequence[str]] = None):
        arr = np.array(values, dtype=np.float64, copy=True)
        if arr.ndim == 1:
            arr = arr[np.newaxis, :]
        if arr.ndim != 2:
            raise SignalError(f"signal matrix must be 2-D, got shape {arr.shape}")
        n, m = arr.shape
        if n < 1:
            raise SignalError("signal matrix needs at least one signal")
        if m < 1:
            raise SignalError("empty signal")
        if not np.all(np.isfinite(arr)):
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise SignalError(
                f"non-finite sample in signal {int(bad[0])} at index {int(bad[1])}"
            )
        if names is None:
            names = [f"s{j}" for j in range(n)]
        names = tuple(str(s) for s in names)
        if len(names) != n:
            raise SignalError(f"expected {n} signal names, got {len(names)}")
        if len(set(names)) != n:
            raise SignalError("signal names must be distinct")
        object.__setattr__(self, "values", _readonly(arr))
        object.__setattr__(self, "names", names)

    @property
    def n_signals(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    def row(self, name: str) -> np.ndarray:
        return self.values[self.names.index(name)]

    def with_values(self, values: Any) -> "SignalMatrix":
        """Same names, new values (the shape may change along the time axis)."""
        return SignalMatrix(values, self.names)

    def with_prefix(self, tag: str) -> "SignalMatrix":
        return SignalMatrix(self.values, [f"{tag}/{n}" for n in self.names])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SignalMatrix):
            return NotImplemented
        return self.names == other.names and np.array_equal(self.values, other.values)

    def __repr__(self) -> str:
        return f"SignalMatrix(N={self.n_signals}, M={self.length})"


class SensorKind(str, enum.Enum):
    SKELETON = "skeleton"
    INERTIAL = "inertial"
    WIFI_CSI = "wifi_csi"
    MOCAP = "mocap"
    GENERIC = "generic"


@dataclass(frozen=True)
class SensorDescriptor:
    """Sensor kind plus optional layout (joints/coords for skeletons, bands for CSI)."""

    kind: SensorKind = SensorKind.GENERIC
    joints: Optional[int] = None
    coords: Optional[int] = None
    bands: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SensorKind(self.kind))

    def check(self, n_signals: int) -> None:
        """Raise if the layout metadata disagrees with ``n_signals``."""
        if self.kind is SensorKind.SKELETON and self.joints and self.coords:
            if self.joints * self.coords != n_signals:
                raise SignalError(
                    f"skeleton layout {self.joints}x{self.coords} does not match "
                    f"{n_signals} signals"
                )
        if self.kind is SensorKind.WIFI_CSI and self.bands:
            if self.bands != n_signals:
                raise SignalError(
                    f"CSI layout of {self.bands} bands does not match {n_signals} signals"
                )

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind.value}
        for key in ("joints", "coords", "bands"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        return out

    @classmethod
    def from_dict(cls, data: Optional[Mapping[str, Any]]) -> "SensorDescriptor":
        if not data:
            return cls()
        try:
            kind = SensorKind(data.get("kind", "generic"))
        except ValueError:
            valid = ", ".join(k.value for k in SensorKind)
            raise SignalError(f"unknown sensor kind {data.get('kind')!r} (valid: {valid})")
        return cls(kind, data.get("joints"), data.get("coords"), data.get("bands"))


@dataclass(frozen=True)
class SequenceRecord:
    matrix: SignalMatrix
    label: int
    sequence_id: str
    sensor: SensorDescriptor = field(default_factory=SensorDescriptor)
    sample_rate_hz: Optional[float] = None

    def __post_init__(self):
        if not self.sequence_id:
            raise SignalError("sequence_id must be non-empty")
        if self.label < 0:
            raise SignalError(f"negative class label {self.label}")
        if self.sample_rate_hz is not None and not self.sample_rate_hz > 0:
            raise SignalError("sample_rate_hz must be positive")
        self.sensor.check(self.matrix.n_signals)


def population_std(signal: Sequence[float]) -> float:
    """Standard deviation with the population convention (divide by M)."""
    x = np.asarray(signal, dtype=np.float64)
    if x.size == 0:
        raise SignalError("empty signal")
    return float(row_std(x[np.newaxis, :])[0])


def row_std(values: np.ndarray) -> np.ndarray:
    """Population standard deviation of every row of a 2-D array.

    Rows are shifted by their first sample before centring, which makes
    constant rows exactly zero and keeps large offsets from cancelling.
    """
    values = np.asarray(values, dtype=np.float64)
    shifted = values - values[:, :1]
    centered = shifted - shifted.mean(axis=1, keepdims=True)
    # second pass removes the rounding left in the first mean
    centered -= centered.mean(axis=1, keepdims=True)
    return np.sqrt(np.mean(centered * centered, axis=1))


def resample_linear(signal: Sequence[float], target_len: int) -> np.ndarray:
    """Evaluate the piecewise-linear interpolant of ``signal`` at
    ``target_len`` equally spaced positions over ``[0, M-1]``."""
    x = np.asarray(signal, dtype=np.float64)
    if x.size == 0:
        raise SignalError("empty signal")
    if target_len < 1:
        raise SignalError(f"target_len must be >= 1, got {target_len}")
    m = x.size
    if m == target_len:
        return x.copy()
    if m == 1:
        return np.full(target_len, x[0])
    if target_len == 1:
        return x[:1].copy()
    pos = np.linspace(0.0, m - 1, target_len)
    out = np.interp(pos, np.arange(m, dtype=np.float64), x)
    out[0], out[-1] = x[0], x[-1]
    return out


def resample_rows(values: np.ndarray, target_len: int) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.shape[1] == target_len:
        return values.copy()
    return np.stack([resample_linear(r, target_len) for r in values])


@dataclass(frozen=True)
class RangeMode:
    """Value-range policy: per-sequence min/max, or fixed bounds."""

    kind: str = "per_sequence"
    lo: float = 0.0
    hi: float = 0.0

    def __post_init__(self):
        if self.kind not in ("per_sequence", "fixed"):
            raise SignalError(f"unknown range mode {self.kind!r}")
        if self.kind == "fixed":
            if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
                raise SignalError("fixed range bounds must be finite")
            if self.lo > self.hi:
                raise SignalError(f"fixed range min {self.lo} > max {self.hi}")

    @classmethod
    def fixed(cls, lo: float, hi: float) -> "RangeMode":
        return cls("fixed", float(lo), float(hi))

    def to_dict(self) -> dict:
        if self.kind == "fixed":
            return {"kind": "fixed", "min": self.lo, "max": self.hi}
        return {"kind": "per_sequence"}


PER_SEQUENCE = RangeMode()


def matrix_value_range(matrix: SignalMatrix, mode: RangeMode = PER_SEQUENCE) -> Tuple[float, float]:
    if mode.kind == "fixed":
        return mode.lo, mode.hi
    return float(matrix.values.min()), float(matrix.values.max())
