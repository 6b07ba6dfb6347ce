"""Deterministic polyline rasterization to black-on-white grayscale images.

Strokes are drawn as capsules (round joins and caps) at supersample
resolution by exact point-to-segment distance, then box-filtered down.
All arithmetic is plain float64/integer math, so output bytes depend only
on the sketch and the RenderSpec.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import ConfigError
from .sketch import Sketch

# Segments longer than this (in supersampled pixels) are subdivided before
# windowed distance tests; subdivision does not change the covered region.
_MAX_CHUNK_PX = 24.0


@dataclass(frozen=True)
class RenderSpec:
    size: int = 512          # pixels per side
    stroke_width: float = 3.0  # output pixels
    supersample: int = 2

    def __post_init__(self) -> None:
        if self.size < 16:
            raise ConfigError(f"size must be >= 16, got {self.size}")
        if self.stroke_width < 1:
            raise ConfigError(f"stroke_width must be >= 1, got {self.stroke_width}")
        if self.supersample < 1:
            raise ConfigError(f"supersample must be >= 1, got {self.supersample}")


@dataclass(frozen=True)
class RasterImage:
    """8-bit grayscale image; 0 = black stroke, 255 = white background."""

    width: int
    height: int
    pixels: np.ndarray  # (height, width) uint8, read-only

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.shape != (self.height, self.width):
            raise ValueError(f"pixel shape {px.shape} != ({self.height}, {self.width})")
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "RasterImage":
        arr = np.asarray(arr, dtype=np.uint8)
        return cls(width=arr.shape[1], height=arr.shape[0], pixels=arr)


def _cover_segment(mask: np.ndarray, ax, ay, bx, by, hw: float) -> None:
    """OR into mask all grid points within hw of segment (ax,ay)-(bx,by)."""
    size = mask.shape[0]
    pad = hw + 1.0
    x0 = max(0, math.floor(min(ax, bx) - pad))
    x1 = min(size - 1, math.ceil(max(ax, bx) + pad))
    y0 = max(0, math.floor(min(ay, by) - pad))
    y1 = min(size - 1, math.ceil(max(ay, by) + pad))
    if x0 > x1 or y0 > y1:
        return
    xs = np.arange(x0, x1 + 1, dtype=np.float64)
    ys = np.arange(y0, y1 + 1, dtype=np.float64)[:, None]
    fx = xs - ax
    fy = ys - ay
    dx_seg = bx - ax
    dy_seg = by - ay
    denom = dx_seg * dx_seg + dy_seg * dy_seg
    if denom == 0.0:
        ddx = fx
        ddy = fy
    else:
        t = np.clip((fx * dx_seg + fy * dy_seg) / denom, 0.0, 1.0)
        ddx = fx - t * dx_seg
        ddy = fy - t * dy_seg
    cover = ddx * ddx + ddy * ddy <= hw * hw
    np.logical_or(mask[y0 : y1 + 1, x0 : x1 + 1], cover, out=mask[y0 : y1 + 1, x0 : x1 + 1])


def render(s: Sketch | None, spec: RenderSpec = RenderSpec()) -> RasterImage:
    """Rasterize a sketch; an empty (None) sketch yields an all-white image.

    Pixel (i, j) at supersample resolution is covered when the grid point
    (i, j) in pixel coordinates lies within half the (supersampled) stroke
    width of any stroke segment. Canvas [0,1]^2 maps onto [0, S] pixel
    coordinates with S = size * supersample.
    """
    ss = spec.supersample
    grid = spec.size * ss
    mask = np.zeros((grid, grid), dtype=bool)
    hw = spec.stroke_width * ss / 2.0

    if s is not None:
        for stroke in s.strokes:
            pts = stroke.points * grid
            if len(pts) == 1:
                _cover_segment(mask, pts[0, 0], pts[0, 1], pts[0, 0], pts[0, 1], hw)
                continue
            for (ax, ay), (bx, by) in zip(pts[:-1], pts[1:]):
                seg_len = math.hypot(bx - ax, by - ay)
                n = max(1, math.ceil(seg_len / _MAX_CHUNK_PX))
                if n == 1:
                    _cover_segment(mask, ax, ay, bx, by, hw)
                else:
                    for k in range(n):
                        t0, t1 = k / n, (k + 1) / n
                        _cover_segment(
                            mask,
                            ax + t0 * (bx - ax),
                            ay + t0 * (by - ay),
                            ax + t1 * (bx - ax),
                            ay + t1 * (by - ay),
                            hw,
                        )

    if ss == 1:
        pixels = np.where(mask, 0, 255).astype(np.uint8)
    else:
        ink = mask.reshape(spec.size, ss, spec.size, ss).sum(axis=(1, 3), dtype=np.int64)
        blank = ss * ss - ink
        # round-half-up of 255 * blank / ss^2 in pure integer math
        pixels = ((510 * blank + ss * ss) // (2 * ss * ss)).astype(np.uint8)
    return RasterImage(width=spec.size, height=spec.size, pixels=pixels)


def foreground_points(img: RasterImage, threshold: int = 128) -> np.ndarray:
    """Coordinates (x, y) of all pixels darker than `threshold`, sorted row-major."""
    if not 0 <= threshold <= 255:
        raise ConfigError(f"threshold must be in [0,255], got {threshold}")
    ys, xs = np.nonzero(img.pixels < threshold)
    return np.column_stack([xs, ys])


def to_png_bytes(img: RasterImage) -> bytes:
    """Encode as 8-bit grayscale PNG (no alpha, no interlacing)."""
    buf = io.BytesIO()
    Image.fromarray(img.pixels, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def save_png(img: RasterImage, path) -> None:
    with open(path, "wb") as fh:
        fh.write(to_png_bytes(img))


def load_png(path) -> RasterImage:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.uint8)
    return RasterImage.from_array(arr)
