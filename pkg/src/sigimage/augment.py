"""Seedable geometric augmentations applied to encoded images.

All transforms use inverse mapping with nearest-neighbour sampling, so
identity parameters reproduce the input byte for byte.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .signal_core import SignalError

RGB = Tuple[int, int, int]
IDENTITY_CORNERS = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))


def _fill(shape, background) -> np.ndarray:
    out = np.empty(shape, dtype=np.uint8)
    out[:] = background
    return out


def _sample(image: np.ndarray, src_r: np.ndarray, src_c: np.ndarray, background) -> np.ndarray:
    h, w = image.shape[:2]
    r = np.floor(src_r + 0.5).astype(np.int64)
    c = np.floor(src_c + 0.5).astype(np.int64)
    inside = (r >= 0) & (r < h) & (c >= 0) & (c < w)
    out = _fill(image.shape, background)
    out[inside] = image[r[inside], c[inside]]
    return out


def width_stretch(image: np.ndarray, factor: float, background: RGB = (0, 0, 0)) -> np.ndarray:
    """Rescale horizontally by ``factor`` and center-crop or center-pad back to W."""
    if not 0.25 <= factor <= 4.0:
        raise SignalError(f"stretch factor must be in [0.25, 4], got {factor}")
    w = image.shape[1]
    scaled_w = int(math.floor(w * factor + 0.5))
    offset = (scaled_w - w) // 2
    j = np.arange(w) + offset  # column in the stretched image
    src = np.floor((j + 0.5) / factor).astype(np.int64)
    valid = (j >= 0) & (j < scaled_w)
    src = np.clip(src, 0, w - 1)
    out = _fill(image.shape, background)
    out[:, valid] = image[:, src[valid]]
    return out


def rotate(image: np.ndarray, angle_deg: float, background: RGB = (0, 0, 0),
           max_angle: float = 45.0) -> np.ndarray:
    """Rotate counter-clockwise about the image center."""
    if abs(angle_deg) > max_angle:
        raise SignalError(f"rotation angle {angle_deg} exceeds +/-{max_angle} degrees")
    if angle_deg == 0:
        return image.copy()
    h, w = image.shape[:2]
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    theta = math.radians(angle_deg)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    rr, cc = np.mgrid[0:h, 0:w].astype(np.float64)
    x, y = cc - cx, cy - rr  # y grows upwards
    src_x = x * cos_t + y * sin_t
    src_y = -x * sin_t + y * cos_t
    return _sample(image, cy - src_y, src_x + cx, background)


def homography_from_points(src, dst) -> np.ndarray:
    """3x3 matrix H with H @ (x, y, 1) ~ dst for each of four point pairs."""
    a = np.zeros((8, 8))
    b = np.zeros(8)
    for k, ((x, y), (u, v)) in enumerate(zip(src, dst)):
        a[2 * k] = [x, y, 1, 0, 0, 0, -u * x, -u * y]
        a[2 * k + 1] = [0, 0, 0, x, y, 1, -v * x, -v * y]
        b[2 * k], b[2 * k + 1] = u, v
    try:
        sol = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        raise SignalError("degenerate corner configuration") from None
    return np.append(sol, 1.0).reshape(3, 3)


def _check_quad(corners) -> np.ndarray:
    q = np.asarray(corners, dtype=np.float64)
    if q.shape != (4, 2):
        raise SignalError(f"expected 4 corner points, got shape {q.shape}")
    if np.any(q < -0.25) or np.any(q > 1.25):
        raise SignalError("corners must lie within [-0.25, 1.25] of the image frame")
    edges = np.roll(q, -1, axis=0) - q
    nxt = np.roll(edges, -1, axis=0)
    cross = edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]
    if np.any(np.abs(cross) < 1e-12):
        raise SignalError("degenerate corners: three consecutive points are collinear")
    if not (np.all(cross > 0) or np.all(cross < 0)):
        raise SignalError("corners do not form a convex quadrilateral")
    return q


def perspective_warp(image: np.ndarray, corners, background: RGB = (0, 0, 0)) -> np.ndarray:
    """Warp so the quadrilateral ``corners`` fills the frame.

    ``corners`` are (x, y) pairs in frame-relative units (0..1), ordered
    top-left, top-right, bottom-right, bottom-left.
    """
    q = _check_quad(corners)
    if np.array_equal(q, np.asarray(IDENTITY_CORNERS)):
        return image.copy()
    h, w = image.shape[:2]
    scale = np.array([w - 1, h - 1], dtype=np.float64)
    frame = np.asarray(IDENTITY_CORNERS) * scale
    # maps output pixels back into the quad
    inv = homography_from_points(frame, q * scale)
    rr, cc = np.mgrid[0:h, 0:w].astype(np.float64)
    pts = np.stack([cc.ravel(), rr.ravel(), np.ones(h * w)])
    sx, sy, sw = inv @ pts
    with np.errstate(divide="ignore", invalid="ignore"):
        src_c = np.where(sw != 0, sx / sw, -1.0).reshape(h, w)
        src_r = np.where(sw != 0, sy / sw, -1.0).reshape(h, w)
    return _sample(image, src_r, src_c, background)


@dataclass(frozen=True)
class AugmentSpec:
    width_stretch_range: Tuple[float, float] = (0.8, 1.2)
    rotation_range_deg: Tuple[float, float] = (-10.0, 10.0)
    perspective_jitter: float = 0.05
    count_per_image: int = 0
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.width_stretch_range
        if not 0 < lo <= hi:
            raise SignalError(f"invalid width_stretch_range {self.width_stretch_range}")
        if lo < 0.25 or hi > 4.0:
            raise SignalError("width_stretch_range must lie within [0.25, 4]")
        lo, hi = self.rotation_range_deg
        if not lo <= hi or max(abs(lo), abs(hi)) > 45:
            raise SignalError(f"invalid rotation_range_deg {self.rotation_range_deg}")
        if not 0.0 <= self.perspective_jitter <= 0.25:
            raise SignalError("perspective_jitter must be in [0, 0.25]")
        if self.count_per_image < 0:
            raise SignalError("count_per_image must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise SignalError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "width_stretch_range", tuple(map(float, self.width_stretch_range)))
        object.__setattr__(self, "rotation_range_deg", tuple(map(float, self.rotation_range_deg)))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["width_stretch_range"] = list(self.width_stretch_range)
        d["rotation_range_deg"] = list(self.rotation_range_deg)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "AugmentSpec":
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise SignalError(f"unknown augment fields: {', '.join(sorted(unknown))}")
        return cls(**data)


@dataclass(frozen=True)
class AugmentParams:
    stretch: float
    angle_deg: float
    corners: Tuple[Tuple[float, float], ...]

    def to_dict(self) -> dict:
        return {"stretch": self.stretch, "angle_deg": self.angle_deg,
                "corners": [list(c) for c in self.corners]}


def draw_params(spec: AugmentSpec, image_index: int, variant: int) -> AugmentParams:
    """Parameters for one variant; a pure function of (seed, image, variant)."""
    ss = np.random.SeedSequence(spec.seed, spawn_key=(image_index, variant))
    rng = np.random.Generator(np.random.Philox(ss))
    stretch = float(rng.uniform(*spec.width_stretch_range))
    angle = float(rng.uniform(*spec.rotation_range_deg))
    j = spec.perspective_jitter
    jitter = rng.uniform(-j, j, size=(4, 2))
    corners = tuple((float(x), float(y)) for x, y in np.asarray(IDENTITY_CORNERS) + jitter)
    return AugmentParams(stretch, angle, corners)


def apply_params(image: np.ndarray, params: AugmentParams, background: RGB = (0, 0, 0)) -> np.ndarray:
    out = width_stretch(image, params.stretch, background)
    out = rotate(out, params.angle_deg, background)
    return perspective_warp(out, params.corners, background)


def _augment_one(args):
    image, spec, index, background = args
    return [apply_params(image, draw_params(spec, index, v), background)
            for v in range(spec.count_per_image)]


def augment_batch(images: Sequence[np.ndarray], spec: AugmentSpec,
                  background: RGB = (0, 0, 0), workers: int = 1) -> List[np.ndarray]:
    """``count_per_image`` variants per input, grouped by input in input order."""
    if spec.count_per_image == 0:
        return []
    jobs = [(img, spec, i, background) for i, img in enumerate(images)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            groups = list(pool.map(_augment_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        groups = [_augment_one(j) for j in jobs]
    return [img for group in groups for img in group]
