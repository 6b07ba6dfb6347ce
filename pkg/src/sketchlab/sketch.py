"""Vector sketch data model: Quick,Draw!-format NDJSON parsing, normalization, resampling.

Coordinates live in a unit canvas [0,1]^2, stored as absolute positions.
All values are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .errors import (
    ConfigError,
    CoordinateRangeError,
    EmptySketchError,
    ParseError,
)

QUICKDRAW_MAX = 255  # source coordinate range of the simplified-drawing schema


class Point(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class CanvasSpec:
    """Unit canvas with a uniform margin kept clear of ink."""

    margin: float = 0.05

    def __post_init__(self) -> None:
        if not 0.0 <= self.margin < 0.5:
            raise ConfigError(f"margin must be in [0, 0.5), got {self.margin}")


class Stroke:
    """An ordered polyline; `points` is a read-only (n, 2) float64 array in [0,1]^2."""

    __slots__ = ("points",)

    def __init__(self, points: np.ndarray | Iterable) -> None:
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
            raise ValueError(f"stroke needs an (n>=1, 2) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("stroke contains non-finite coordinates")
        pts = np.clip(pts, 0.0, 1.0)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Stroke) and np.array_equal(self.points, other.points)

    def __repr__(self) -> str:
        return f"Stroke({len(self)} pts)"

    @property
    def length(self) -> float:
        """Total polyline arc length."""
        if len(self) < 2:
            return 0.0
        return float(np.sum(np.linalg.norm(np.diff(self.points, axis=0), axis=1)))


@dataclass(frozen=True)
class Sketch:
    """One drawing: ordered strokes plus its category label and source id."""

    strokes: list[Stroke]
    category: str = ""
    source_id: str = ""

    def __post_init__(self) -> None:
        if not self.strokes:
            raise EmptySketchError("sketch has no strokes")

    def all_points(self) -> np.ndarray:
        return np.concatenate([st.points for st in self.strokes], axis=0)

    def with_strokes(self, strokes: list[Stroke]) -> "Sketch":
        return Sketch(strokes=strokes, category=self.category, source_id=self.source_id)

    def total_length(self) -> float:
        return sum(st.length for st in self.strokes)


def sketches_equal(a: Sketch, b: Sketch) -> bool:
    """Exact geometric and label equality."""
    return (
        a.category == b.category
        and a.source_id == b.source_id
        and len(a.strokes) == len(b.strokes)
        and all(sa == sb for sa, sb in zip(a.strokes, b.strokes))
    )


def parse_quickdraw_line(text: str, default_id: str = "") -> Sketch:
    """Parse one NDJSON record of the simplified Quick,Draw! schema.

    The record must carry `word` (category) and `drawing` = list of
    [xs, ys] pairs with integer coordinates in [0, 255]. Coordinates are
    divided by 255 into the unit canvas. A `key_id`, when present, becomes
    the source id.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        snippet = text.strip()[:60]
        raise ParseError(f"malformed JSON ({exc.msg}) in line: {snippet!r}") from exc
    if not isinstance(obj, dict) or "word" not in obj or "drawing" not in obj:
        raise ParseError(f"record must carry 'word' and 'drawing': {text.strip()[:60]!r}")
    drawing = obj["drawing"]
    if not isinstance(drawing, list) or not drawing:
        raise EmptySketchError(f"empty drawing for word {obj['word']!r}")

    strokes = []
    for i, entry in enumerate(drawing):
        if not (isinstance(entry, (list, tuple)) and len(entry) == 2):
            raise ParseError(f"stroke {i} is not an [xs, ys] pair")
        xs, ys = entry
        if len(xs) != len(ys) or len(xs) < 1:
            raise ParseError(f"stroke {i} has mismatched or empty coordinate lists")
        arr = np.column_stack([xs, ys]).astype(np.float64)
        if arr.min() < 0 or arr.max() > QUICKDRAW_MAX:
            raise CoordinateRangeError(
                f"stroke {i} has coordinates outside [0, {QUICKDRAW_MAX}]"
            )
        strokes.append(Stroke(arr / QUICKDRAW_MAX))

    source_id = str(obj.get("key_id", "")) or default_id
    return Sketch(strokes=strokes, category=str(obj["word"]), source_id=source_id)


def serialize_quickdraw(s: Sketch) -> str:
    """Serialize back to one NDJSON line, re-quantizing coordinates to 0-255 integers."""
    drawing = []
    for st in s.strokes:
        q = np.rint(st.points * QUICKDRAW_MAX).astype(int)
        drawing.append([q[:, 0].tolist(), q[:, 1].tolist()])
    obj: dict = {"word": s.category}
    if s.source_id:
        obj["key_id"] = s.source_id
    obj["drawing"] = drawing
    return json.dumps(obj, separators=(",", ":"))


def load_quickdraw(lines: Iterable[str]) -> Iterator[Sketch]:
    """Parse an NDJSON stream, one sketch per non-blank line."""
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            yield parse_quickdraw_line(line, default_id=f"line{lineno}")
        except (ParseError, EmptySketchError, CoordinateRangeError) as exc:
            raise type(exc)(f"line {lineno}: {exc}") from exc


def bounds(s: Sketch) -> tuple[Point, Point]:
    """Axis-aligned bounding box over all stroke points."""
    pts = s.all_points()
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    return Point(float(lo[0]), float(lo[1])), Point(float(hi[0]), float(hi[1]))


def normalize(s: Sketch, spec: CanvasSpec = CanvasSpec()) -> Sketch:
    """Uniformly scale and center the sketch into the margin box.

    Aspect ratio is preserved; the bounding box is fit to
    [margin, 1-margin]^2 and centered. Zero-area boxes are centered
    without scaling.
    """
    lo, hi = bounds(s)
    w = hi.x - lo.x
    h = hi.y - lo.y
    extent = max(w, h)
    target = 1.0 - 2.0 * spec.margin
    scale = target / extent if extent > 0 else 1.0
    cx = (lo.x + hi.x) / 2.0
    cy = (lo.y + hi.y) / 2.0
    strokes = []
    for st in s.strokes:
        pts = (st.points - (cx, cy)) * scale + 0.5
        strokes.append(Stroke(pts))
    return s.with_strokes(strokes)


def resample_arclength(st: Stroke, spacing: float) -> Stroke:
    """Subdivide each segment so consecutive vertices are at most `spacing` apart.

    Original vertices are kept exactly, so the geometric path (and its
    length) is unchanged; inserted vertices lie on the original segments.
    Consecutive duplicate points are dropped first.
    """
    if spacing <= 0:
        raise ConfigError(f"resample spacing must be > 0, got {spacing}")
    pts = st.points
    if len(pts) < 2:
        return Stroke(pts.copy())

    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
    pts = pts[keep]
    if len(pts) < 2:
        return Stroke(pts.copy())

    out = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        seg_len = math.hypot(b[0] - a[0], b[1] - a[1])
        n = max(1, math.ceil(seg_len / spacing))
        if n > 1:
            t = np.arange(1, n)[:, None] / n
            out.extend(a + t * (b - a))
        out.append(b)
    return Stroke(np.array(out))
