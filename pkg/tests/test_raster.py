"""Rasterization contracts: scanline oracle, determinism, translation consistency."""

import numpy as np
import pytest

from sketchlab.errors import ConfigError
from sketchlab.raster import (
    RasterImage,
    RenderSpec,
    foreground_points,
    load_png,
    render,
    save_png,
    to_png_bytes,
)
from sketchlab.sketch import Sketch, Stroke


def test_empty_sketch_renders_white():
    img = render(None, RenderSpec(size=32, supersample=1))
    assert img.pixels.min() == 255


def test_scanline_oracle_row():
    # horizontal centerline across an 8x8 canvas at width 1 covers exactly row 4
    s = Sketch(strokes=[Stroke(np.array([[0.0, 0.5], [1.0, 0.5]]))])
    img = render(s, RenderSpec(size=16, stroke_width=1, supersample=1))
    black_rows = sorted(set(np.nonzero(img.pixels < 128)[0].tolist()))
    assert black_rows == [8]
    assert np.all(img.pixels[8] == 0)


def test_render_deterministic(corpus_100):
    spec = RenderSpec(size=128)
    a = render(corpus_100[0], spec)
    b = render(corpus_100[0], spec)
    assert np.array_equal(a.pixels, b.pixels)
    assert to_png_bytes(a) == to_png_bytes(b)


def test_translation_consistency():
    # coordinates snapped to the pixel grid shift bit-exactly
    size = 64
    gen = np.random.default_rng(3)
    pts = gen.integers(16, 40, size=(12, 2)) / size
    s = Sketch(strokes=[Stroke(pts)])
    shifted = Sketch(strokes=[Stroke(pts + 3 / size)])
    spec = RenderSpec(size=size, stroke_width=1, supersample=1)
    img = render(s, spec).pixels
    img_shifted = render(shifted, spec).pixels
    assert np.array_equal(img[10:50, 10:50], img_shifted[13:53, 13:53])


def test_monotonic_coverage_with_width(corpus_100):
    s = corpus_100[1]
    counts = []
    for width in (1, 2, 3, 5):
        img = render(s, RenderSpec(size=96, stroke_width=width, supersample=1))
        counts.append(len(foreground_points(img)))
    assert counts == sorted(counts)
    assert counts[0] < counts[-1]


def test_supersampling_produces_gray_edges(corpus_100):
    img = render(corpus_100[0], RenderSpec(size=96, supersample=2))
    values = set(np.unique(img.pixels).tolist())
    assert 0 in values and 255 in values
    assert values - {0, 255}, "2x supersampling should yield intermediate levels"


def test_foreground_points_basics():
    white = RasterImage.from_array(np.full((8, 8), 255, np.uint8))
    assert len(foreground_points(white)) == 0
    one = np.full((8, 8), 255, np.uint8)
    one[4, 3] = 0
    img = RasterImage.from_array(one)
    assert foreground_points(img).tolist() == [[3, 4]]


def test_foreground_threshold_validation():
    img = RasterImage.from_array(np.full((8, 8), 255, np.uint8))
    with pytest.raises(ConfigError):
        foreground_points(img, threshold=300)


def test_every_corpus_sketch_has_ink(corpus_100):
    spec = RenderSpec(size=128)
    for s in corpus_100[:50]:
        img = render(s, spec)
        assert len(foreground_points(img)) > 0


def test_png_round_trip(tmp_path, corpus_100):
    img = render(corpus_100[2], RenderSpec(size=64))
    path = tmp_path / "x.png"
    save_png(img, path)
    back = load_png(path)
    assert np.array_equal(back.pixels, img.pixels)


def test_render_spec_validation():
    with pytest.raises(ConfigError):
        RenderSpec(size=8)
    with pytest.raises(ConfigError):
        RenderSpec(stroke_width=0)
    with pytest.raises(ConfigError):
        RenderSpec(supersample=0)


def test_single_point_stroke_renders_disk():
    s = Sketch(strokes=[Stroke(np.array([[0.5, 0.5]]))])
    img = render(s, RenderSpec(size=32, stroke_width=3, supersample=1))
    assert len(foreground_points(img)) > 0
