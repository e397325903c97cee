"""Rasterize a signal matrix into an RGB image.

Time runs left to right, value bottom to top.  Each signal gets an evenly
spaced HSV hue, and every line segment fades from white at the first sample
to the signal's hue at the last one.  Images are ``(H, W, 3)`` uint8 arrays.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Tuple

import numpy as np
from PIL import Image

from .ingest import atomic_write_bytes
from .signal_core import (PER_SEQUENCE, RangeMode, SigImageError, SignalError,
                          SignalMatrix, matrix_value_range)

RGB = Tuple[int, int, int]


class ImageWriteError(SigImageError, OSError):
    pass


def _round_half_up(x):
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)


@dataclass(frozen=True)
class EncodingConfig:
    height: int = 256
    width: int = 256
    line_width: int = 1
    background: RGB = (0, 0, 0)
    saturation: float = 1.0
    value: float = 1.0
    range_mode: RangeMode = field(default_factory=lambda: PER_SEQUENCE)
    draw_order: str = "input_order"
    gradient: bool = True

    def __post_init__(self):
        if self.height < 2 or self.width < 2:
            raise SignalError(f"image must be at least 2x2, got {self.height}x{self.width}")
        if self.line_width < 1:
            raise SignalError(f"line_width must be >= 1, got {self.line_width}")
        bg = tuple(int(c) for c in self.background)
        if len(bg) != 3 or not all(0 <= c <= 255 for c in bg):
            raise SignalError(f"background must be an RGB triple in [0, 255], got {self.background}")
        object.__setattr__(self, "background", bg)
        for name in ("saturation", "value"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise SignalError(f"{name} must be in [0, 1]")
        if self.draw_order != "input_order":
            raise SignalError(f"unsupported draw order {self.draw_order!r}")

    def to_dict(self) -> dict:
        return {
            "height": self.height, "width": self.width, "line_width": self.line_width,
            "background": list(self.background), "saturation": self.saturation,
            "value": self.value, "range_mode": self.range_mode.to_dict(),
            "draw_order": self.draw_order, "gradient": self.gradient,
        }


@lru_cache(maxsize=64)
def _palette(n: int, saturation: float, value: float) -> Tuple[RGB, ...]:
    # exact rationals so that channels landing on .5 round up reliably
    s, v = Fraction(saturation), Fraction(value)
    colors = []
    for j in range(n):
        hp = Fraction(6 * j, n)  # hue in sixths of the circle
        sector = math.floor(hp)
        f = hp - sector
        p, q, t = v * (1 - s), v * (1 - s * f), v * (1 - s * (1 - f))
        rgb = [(v, t, p), (q, v, p), (p, v, t), (p, q, v), (t, p, v), (v, p, q)][sector % 6]
        colors.append(tuple(math.floor(255 * c + Fraction(1, 2)) for c in rgb))
    return tuple(colors)


def sample_palette(n: int, saturation: float = 1.0, value: float = 1.0) -> list:
    """``n`` colors with hues evenly spaced around the HSV circle, starting at red."""
    if not 1 <= n <= 4096:
        raise SignalError(f"palette size must be in [1, 4096], got {n}")
    return list(_palette(int(n), float(saturation), float(value)))


def _gradient_table(palette: np.ndarray, m: int) -> np.ndarray:
    """(N, M, 3) uint8 colors: row j fades from white to palette[j]."""
    t = np.arange(m, dtype=np.float64)
    u = t / (m - 1) if m > 1 else np.ones(1)
    base = palette.astype(np.float64)[:, np.newaxis, :]
    return _round_half_up(255.0 + u[np.newaxis, :, np.newaxis] * (base - 255.0)).astype(np.uint8)


def temporal_color(base: RGB, t: int, m: int) -> RGB:
    if m < 1 or not 0 <= t < m:
        raise SignalError(f"sample index {t} outside sequence of length {m}")
    u = t / (m - 1) if m > 1 else 1.0
    return tuple(int(math.floor(255.0 + u * (c - 255.0) + 0.5)) for c in base)


def value_to_row(v, value_range: Tuple[float, float], height: int):
    """Map values to row indices; ``max`` lands on row 0, ``min`` on row H-1."""
    lo, hi = value_range
    v = np.asarray(v, dtype=np.float64)
    if hi == lo:
        rows = np.full(v.shape, (height - 1) // 2, dtype=np.int64)
    else:
        rows = _round_half_up((height - 1) * (hi - v) / (hi - lo))
        rows = np.clip(rows, 0, height - 1).astype(np.int64)
    return int(rows) if rows.ndim == 0 else rows


def sample_columns(m: int, width: int) -> np.ndarray:
    if m == 1:
        return np.zeros(1, dtype=np.int64)
    t = np.arange(m, dtype=np.int64)
    return (2 * t * (width - 1) + (m - 1)) // (2 * (m - 1))


def line_pixels(x0, y0, x1, y1):
    """Integer Bresenham for many segments at once.

    Returns ``(xs, ys, seg)`` listing every pixel in drawing order, with
    ``seg`` the index of the segment each pixel belongs to.  Along the major
    axis every step advances one pixel; the minor coordinate is
    ``round_half_up(i * d_minor / d_major)``.
    """
    x0, y0, x1, y1 = (np.asarray(a, dtype=np.int64) for a in (x0, y0, x1, y1))
    dx, dy = x1 - x0, y1 - y0
    adx, ady = np.abs(dx), np.abs(dy)
    major = np.maximum(adx, ady)
    counts = major + 1
    seg = np.repeat(np.arange(x0.size), counts)
    starts = np.cumsum(counts) - counts
    i = np.arange(seg.size, dtype=np.int64) - starts[seg]
    L = np.maximum(major, 1)[seg]
    x_major = (adx >= ady)[seg]
    minor_len = np.where(x_major, ady[seg], adx[seg])
    minor_step = (2 * i * minor_len + L) // (2 * L)
    step_x = np.where(x_major, i, minor_step)
    step_y = np.where(x_major, minor_step, i)
    xs = x0[seg] + np.sign(dx)[seg] * step_x
    ys = y0[seg] + np.sign(dy)[seg] * step_y
    return xs, ys, seg


def _stamp(rows, cols, seg, width, height, line_width):
    if line_width == 1:
        return rows, cols, seg
    offs = np.arange(-((line_width - 1) // 2), line_width // 2 + 1)
    dr, dc = np.meshgrid(offs, offs, indexing="ij")
    dr, dc = dr.ravel(), dc.ravel()
    rows = (rows[:, None] + dr[None, :]).ravel()
    cols = (cols[:, None] + dc[None, :]).ravel()
    seg = np.repeat(seg, dr.size)
    keep = (rows >= 0) & (rows < height) & (cols >= 0) & (cols < width)
    return rows[keep], cols[keep], seg[keep]


def encode_image(matrix: SignalMatrix, config: EncodingConfig = EncodingConfig()) -> np.ndarray:
    h, w = config.height, config.width
    n, m = matrix.shape
    img = np.empty((h, w, 3), dtype=np.uint8)
    img[:] = config.background

    palette = np.array(sample_palette(n, config.saturation, config.value), dtype=np.uint8)
    if config.gradient:
        colors = _gradient_table(palette, m).reshape(n * m, 3)
    else:
        colors = np.repeat(palette, m, axis=0)

    rows = value_to_row(matrix.values, matrix_value_range(matrix, config.range_mode), h)
    rows = np.asarray(rows).reshape(n, m)
    cols = np.broadcast_to(sample_columns(m, w), (n, m))
    # segment t joins sample t to t+1 and carries sample t's color; the last
    # "segment" is the final point alone so it shows the full base color
    nxt = np.minimum(np.arange(m) + 1, m - 1)
    xs, ys, seg = line_pixels(cols.ravel(), rows.ravel(),
                              cols[:, nxt].ravel(), rows[:, nxt].ravel())
    ys, xs, seg = _stamp(ys, xs, seg, w, h, config.line_width)

    # painter's order: keep the last write to every pixel
    lin = ys * w + xs
    rev = lin[::-1]
    pix, first_in_rev = np.unique(rev, return_index=True)
    winners = seg[::-1][first_in_rev]
    img.reshape(-1, 3)[pix] = colors[winners]
    return img


def png_bytes(image: np.ndarray) -> bytes:
    image = np.asarray(image)
    if image.dtype != np.uint8 or image.ndim != 3 or image.shape[2] != 3:
        raise SignalError(f"expected an (H, W, 3) uint8 image, got {image.dtype} {image.shape}")
    buf = io.BytesIO()
    Image.fromarray(image, "RGB").save(buf, format="PNG", compress_level=6)
    return buf.getvalue()


def write_png(image: np.ndarray, path) -> None:
    path = Path(path)
    data = png_bytes(image)
    try:
        atomic_write_bytes(path, data)
    except OSError as exc:
        raise ImageWriteError(f"cannot write {path}: {exc.strerror or exc}") from exc


def read_png(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8).copy()
