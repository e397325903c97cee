"""Variance-threshold signal reduction and multi-source signal fusion."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .signal_core import SignalError, SignalMatrix, resample_rows, row_std

TAU_BASES = ("max_sigma", "max_abs_value")
FUSE_POLICIES = ("interpolate_to_max", "subsample_to_min")


@dataclass(frozen=True)
class ReductionConfig:
    """Threshold settings.

    ``tau`` overrides the per-sequence threshold with a fixed value (for a
    dataset-global threshold computed elsewhere).
    """

    tau_ratio: float = 0.2
    tau_basis: str = "max_sigma"
    enabled: bool = True
    tau: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.tau_ratio <= 1.0:
            raise SignalError(f"tau_ratio must be in [0, 1], got {self.tau_ratio}")
        if self.tau_basis not in TAU_BASES:
            raise SignalError(f"unknown tau basis {self.tau_basis!r}")
        if self.tau is not None and not self.tau >= 0:
            raise SignalError(f"tau must be non-negative, got {self.tau}")

    def to_dict(self) -> dict:
        return {"tau_ratio": self.tau_ratio, "tau_basis": self.tau_basis,
                "enabled": self.enabled, "tau": self.tau}


def compute_tau(matrix: SignalMatrix, config: ReductionConfig = ReductionConfig()) -> float:
    if config.tau is not None:
        return float(config.tau)
    if config.tau_basis == "max_sigma":
        basis = float(row_std(matrix.values).max())
    else:
        basis = float(np.abs(matrix.values).max())
    return config.tau_ratio * basis


def contribution_vector(matrix: SignalMatrix, tau: float) -> np.ndarray:
    """0/1 mask: 1 where the signal's population std is at least ``tau``."""
    if tau < 0:
        raise SignalError(f"tau must be non-negative, got {tau}")
    return (row_std(matrix.values) >= tau).astype(np.int8)


def apply_reduction(matrix: SignalMatrix, c: Sequence[int]) -> SignalMatrix:
    c = np.asarray(c)
    if c.shape != (matrix.n_signals,):
        raise SignalError(
            f"contribution vector has length {c.size}, matrix has {matrix.n_signals} signals"
        )
    # zero whole rows rather than multiply so that -0.0 never appears
    values = np.where(c[:, np.newaxis] != 0, matrix.values, 0.0)
    return matrix.with_values(values)


def reduce(matrix: SignalMatrix, config: ReductionConfig = ReductionConfig()) -> SignalMatrix:
    if not config.enabled:
        return matrix
    return apply_reduction(matrix, contribution_vector(matrix, compute_tau(matrix, config)))


def fuse(matrices: Sequence[SignalMatrix], policy: str = "interpolate_to_max",
         tags: Optional[Sequence[str]] = None) -> SignalMatrix:
    """Stack the signals of several sources after bringing them to one length.

    Names become ``"<tag>/<name>"``; tags default to the source index.
    """
    matrices = list(matrices)
    if not matrices:
        raise SignalError("fuse needs at least one matrix")
    if policy not in FUSE_POLICIES:
        raise SignalError(f"unknown fuse policy {policy!r}")
    if tags is None:
        tags = [str(i) for i in range(len(matrices))]
    if len(tags) != len(matrices):
        raise SignalError(f"got {len(tags)} tags for {len(matrices)} matrices")
    lengths = [m.length for m in matrices]
    target = max(lengths) if policy == "interpolate_to_max" else min(lengths)
    rows = [resample_rows(m.values, target) for m in matrices]
    names = [f"{tag}/{name}" for tag, m in zip(tags, matrices) for name in m.names]
    return SignalMatrix(np.concatenate(rows, axis=0), names)


def reduce_then_fuse(matrices: Sequence[SignalMatrix],
                     config: ReductionConfig = ReductionConfig(),
                     policy: str = "interpolate_to_max",
                     tags: Optional[Sequence[str]] = None) -> SignalMatrix:
    """Reduce every source on its own scale, then fuse."""
    return fuse([reduce(m, config) for m in matrices], policy, tags)
