import hashlib
import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from oracles import bresenham, encode_oracle, hsv_red_start_palette
from sigimage.ingest import load_sequence_csv
from sigimage.reduce_fuse import apply_reduction
from sigimage.render import (EncodingConfig, ImageWriteError, encode_image, line_pixels,
                             read_png, sample_columns, sample_palette, temporal_color,
                             value_to_row, write_png)
from sigimage.signal_core import RangeMode, SignalError, SignalMatrix

FIXTURES = Path(__file__).parent / "fixtures"


class TestPalette:
    def test_single(self):
        assert sample_palette(1) == [(255, 0, 0)]

    def test_three(self):
        assert sample_palette(3) == [(255, 0, 0), (0, 255, 0), (0, 0, 255)]

    def test_six(self):
        assert sample_palette(6) == [(255, 0, 0), (255, 255, 0), (0, 255, 0),
                                     (0, 255, 255), (0, 0, 255), (255, 0, 255)]

    def test_zero(self):
        with pytest.raises(SignalError):
            sample_palette(0)

    @pytest.mark.parametrize("n", [1, 2, 5, 12, 25, 52, 75, 100, 256])
    @pytest.mark.parametrize("s,v", [(1.0, 1.0), (0.8, 0.9)])
    def test_matches_sector_oracle(self, n, s, v):
        assert sample_palette(n, s, v) == hsv_red_start_palette(n, s, v)

    @pytest.mark.parametrize("n", range(2, 65))
    def test_distinct_and_adjacent_gap(self, n):
        p = np.array(sample_palette(n), dtype=int)
        assert len({tuple(c) for c in p}) == n
        adjacent = np.abs(p - np.roll(p, -1, axis=0)).max(axis=1)
        assert adjacent.min() >= 8

    def test_distinct_up_to_256(self):
        assert len(set(sample_palette(256))) == 256


class TestTemporalColor:
    def test_start_is_white(self):
        assert temporal_color((0, 0, 255), 0, 100) == (255, 255, 255)

    def test_end_is_base(self):
        assert temporal_color((12, 34, 56), 99, 100) == (12, 34, 56)

    def test_midpoint(self):
        # u = 0.5, round(255 - 127.5) = 128
        assert temporal_color((255, 0, 0), 50, 101) == (255, 128, 128)

    def test_single_sample_is_base(self):
        assert temporal_color((1, 2, 3), 0, 1) == (1, 2, 3)

    def test_out_of_range(self):
        with pytest.raises(SignalError):
            temporal_color((0, 0, 0), 5, 5)

    @given(st.tuples(*[st.integers(0, 255)] * 3), st.integers(2, 300))
    def test_monotone(self, base, m):
        cols = np.array([temporal_color(base, t, m) for t in range(m)])
        assert np.all(np.diff(cols, axis=0) <= 0)
        assert tuple(cols[-1]) == base and tuple(cols[0]) == (255, 255, 255)


class TestValueToRow:
    def test_min_bottom(self):
        assert value_to_row(-2.0, (-2.0, 5.0), 10) == 9

    def test_max_top(self):
        assert value_to_row(5.0, (-2.0, 5.0), 10) == 0

    def test_degenerate_center(self):
        assert value_to_row(7.0, (7.0, 7.0), 9) == 4
        assert value_to_row(7.0, (7.0, 7.0), 10) == 4

    def test_clamps(self):
        assert value_to_row(10.0, (0.0, 1.0), 8) == 0
        assert value_to_row(-10.0, (0.0, 1.0), 8) == 7


class TestLinePixels:
    @given(st.integers(-40, 40), st.integers(-40, 40), st.integers(-40, 40), st.integers(-40, 40))
    def test_matches_incremental_bresenham(self, x0, y0, x1, y1):
        xs, ys, seg = line_pixels([x0], [y0], [x1], [y1])
        assert list(zip(xs.tolist(), ys.tolist())) == bresenham(x0, y0, x1, y1)
        assert (seg == 0).all()

    def test_many_segments_keep_order(self):
        segs = [(0, 0, 5, 2), (5, 2, 5, 2), (5, 2, 1, 9)]
        xs, ys, seg = line_pixels(*zip(*segs))
        expected = [p for s in segs for p in bresenham(*s)]
        assert list(zip(xs.tolist(), ys.tolist())) == expected
        assert seg.tolist() == [i for i, s in enumerate(segs) for _ in bresenham(*s)]

    def test_columns(self):
        assert sample_columns(1, 10).tolist() == [0]
        assert sample_columns(5, 4).tolist() == [0, 1, 2, 2, 3]  # 0, .75, 1.5, 2.25, 3


def _oracle_image(m: SignalMatrix, cfg: EncodingConfig):
    lo = hi = None
    if cfg.range_mode.kind == "fixed":
        lo, hi = cfg.range_mode.lo, cfg.range_mode.hi
    pal = hsv_red_start_palette(m.n_signals, cfg.saturation, cfg.value)
    return np.array(encode_oracle(m.values.tolist(), cfg.height, cfg.width, pal,
                                  cfg.background, lo, hi, cfg.gradient), dtype=np.uint8)


class TestEncodeImage:
    def test_constant_line(self):
        img = encode_image(SignalMatrix(np.full((1, 5), 3.0)), EncodingConfig(height=9, width=4))
        lit = img.any(axis=2)
        assert lit[4].all()
        assert lit.sum() == 4

    @settings(max_examples=120, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(1, 7), st.integers(1, 40)),
                  elements=st.floats(-50, 50)),
           st.integers(2, 40), st.integers(2, 60), st.booleans())
    def test_matches_pixel_oracle(self, values, h, w, gradient):
        m = SignalMatrix(values)
        cfg = EncodingConfig(height=h, width=w, gradient=gradient, background=(3, 2, 1))
        np.testing.assert_array_equal(encode_image(m, cfg), _oracle_image(m, cfg))

    def test_matches_oracle_fixed_range(self):
        m = SignalMatrix(np.random.default_rng(4).normal(size=(4, 30)) * 3)
        cfg = EncodingConfig(height=20, width=33, range_mode=RangeMode.fixed(-1, 1))
        np.testing.assert_array_equal(encode_image(m, cfg), _oracle_image(m, cfg))

    @given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 30)),
                  elements=st.floats(-1e6, 1e6)), st.integers(1, 4))
    def test_shape_and_determinism(self, values, lw):
        m = SignalMatrix(values)
        cfg = EncodingConfig(height=17, width=23, line_width=lw)
        a, b = encode_image(m, cfg), encode_image(m, cfg)
        assert a.shape == (17, 23, 3) and a.dtype == np.uint8
        assert a.tobytes() == b.tobytes()

    def test_line_width_thickens(self):
        m = SignalMatrix(np.full((1, 10), 1.0))
        thin = encode_image(m, EncodingConfig(height=9, width=10)).any(axis=2)
        thick = encode_image(m, EncodingConfig(height=9, width=10, line_width=3)).any(axis=2)
        assert thin.sum() == 10
        assert thick.sum() == 30 and thick[3:6].all()

    @given(arrays(np.float64, st.integers(2, 60), elements=st.floats(-10, 10)),
           st.integers(2, 50))
    def test_single_signal_covers_every_column(self, x, w):
        img = encode_image(SignalMatrix(x), EncodingConfig(height=32, width=w))
        assert img.any(axis=2).any(axis=0).all()

    def test_gradient_endpoints(self):
        m = SignalMatrix([np.linspace(0, 1, 50), np.linspace(1, 0, 50)])
        img = encode_image(m, EncodingConfig(height=64, width=64))
        pal = sample_palette(2)
        # signal 1 starts at top-left, signal 0 ends at top-right
        assert tuple(img[0, 0]) == (255, 255, 255)
        assert tuple(img[0, 63]) == pal[0]
        assert tuple(img[63, 63]) == pal[1]

    def test_identity_hues_survive_full_reduction(self):
        # every signal ends at 0, so final-time pixels coincide in both images
        t = np.linspace(0, 1, 60)
        m = SignalMatrix([np.sin(2 * np.pi * k * t) * (1 - t) for k in (1, 2, 3, 5)])
        cfg = EncodingConfig(height=64, width=64)
        pal = set(sample_palette(4))

        def base_hues(img):
            return {tuple(c) for c in img[:, -1]} & pal

        full = encode_image(m, cfg)
        reduced = encode_image(apply_reduction(m, [0, 0, 0, 0]), cfg)
        assert base_hues(full) == base_hues(reduced) == {sample_palette(4)[-1]}

    def test_zeroed_signal_still_drawn_in_its_color(self):
        rng = np.random.default_rng(3)
        m = SignalMatrix(np.vstack([rng.uniform(1, 2, size=(2, 40)), rng.normal(size=(1, 40))]))
        cfg = EncodingConfig(height=32, width=40, range_mode=RangeMode.fixed(-1, 2))
        img = encode_image(apply_reduction(m, [1, 1, 0]), cfg)
        zero_row = value_to_row(0.0, (-1, 2), 32)
        # the zeroed third signal is a flat line fading from white to its hue
        assert img[zero_row].any(axis=1).all()
        assert tuple(img[zero_row, 0]) == (255, 255, 255)
        assert tuple(img[zero_row, -1]) == sample_palette(3)[2]

    def test_time_reversal_changes_image(self):
        ramp = np.linspace(0, 1, 40)
        cfg = EncodingConfig(height=32, width=32)
        fwd = encode_image(SignalMatrix([ramp]), cfg)
        rev = encode_image(SignalMatrix([ramp[::-1]]), cfg)
        assert fwd.tobytes() != rev.tobytes()
        # mirrored geometry, but the gradient does not mirror
        assert fwd.any(axis=2).tolist() == rev.any(axis=2)[:, ::-1].tolist()

    def test_background_configurable(self):
        img = encode_image(SignalMatrix([[0.0, 1.0]]), EncodingConfig(height=4, width=4,
                                                                     background=(9, 8, 7)))
        assert tuple(img[1, 3]) == (9, 8, 7)

    @pytest.mark.parametrize("kwargs", [{"height": 1}, {"width": 1}, {"line_width": 0},
                                        {"background": (0, 0, 300)}, {"saturation": 2}])
    def test_invalid_config(self, kwargs):
        with pytest.raises(SignalError):
            EncodingConfig(**kwargs)


GOLDENS = json.loads((FIXTURES / "goldens.json").read_text())


@pytest.mark.parametrize("name", sorted(GOLDENS))
def test_golden(name, tmp_path):
    case = GOLDENS[name]
    m = load_sequence_csv(FIXTURES / f"{name}.csv")
    img = encode_image(m, EncodingConfig(**case["config"]))
    assert list(img.shape) == case["shape"]
    assert hashlib.sha256(img.tobytes()).hexdigest() == case["pixel_sha256"]
    np.testing.assert_array_equal(img, read_png(FIXTURES / f"{name}.png"))
    write_png(img, tmp_path / "a.png")
    write_png(encode_image(m, EncodingConfig(**case["config"])), tmp_path / "b.png")
    assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()


class TestPng:
    def test_black_round_trip(self, tmp_path):
        write_png(np.zeros((2, 2, 3), np.uint8), tmp_path / "b.png")
        back = read_png(tmp_path / "b.png")
        assert back.shape == (2, 2, 3) and not back.any()

    def test_encoded_round_trip(self, tmp_path):
        img = encode_image(SignalMatrix(np.random.default_rng(0).normal(size=(7, 50))))
        write_png(img, tmp_path / "sub" / "x.png")
        np.testing.assert_array_equal(read_png(tmp_path / "sub" / "x.png"), img)

    def test_rgb_no_alpha(self, tmp_path):
        from PIL import Image
        write_png(np.zeros((3, 3, 3), np.uint8), tmp_path / "x.png")
        with Image.open(tmp_path / "x.png") as im:
            assert im.mode == "RGB"

    def test_unwritable_path(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        target = blocker / "x.png"
        with pytest.raises(ImageWriteError, match=str(target).replace("\\", "\\\\")):
            write_png(np.zeros((2, 2, 3), np.uint8), target)

    def test_no_temp_left_behind(self, tmp_path):
        write_png(np.zeros((2, 2, 3), np.uint8), tmp_path / "x.png")
        assert [p.name for p in tmp_path.iterdir()] == ["x.png"]
