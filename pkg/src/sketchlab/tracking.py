"""Hand-landmark recording ingest: landmark JSONL to tracking-polyline sketches.

Frame schema (one JSON object per line):
    {"t": <seconds>, "hand": [[x, y] * 21] | null, "pen": <bool, optional>}

The fingertip trajectory is kept raw; no smoothing is applied, because the
downstream consumer is expected to cope with genuine tracking noise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import (
    ConfigError,
    DegenerateGeometryError,
    EmptySketchError,
    TrackFormatError,
)
from .sketch import CanvasSpec, Sketch, Stroke, normalize

N_LANDMARKS = 21
WRIST = 0
INDEX_PIP = 6
INDEX_TIP = 8


@dataclass(frozen=True)
class LandmarkFrame:
    timestamp: float
    landmarks: np.ndarray | None  # (21, 2) float64, or None when no hand detected
    pen_flag: bool | None = None

    @property
    def detected(self) -> bool:
        return self.landmarks is not None


@dataclass(frozen=True)
class TrackRecording:
    frames: list[LandmarkFrame]
    frame_rate: float
    source: str = "real"  # synthetic | real


@dataclass(frozen=True)
class PenHeuristic:
    """Pen-down when the index fingertip extends well past the PIP joint."""

    extension_ratio_threshold: float = 1.3

    def __post_init__(self) -> None:
        if self.extension_ratio_threshold <= 1.0:
            raise ConfigError("extension ratio threshold must be > 1")


def parse_landmarks(
    lines: Iterable[str], frame_rate: float | None = None, source: str = "real"
) -> TrackRecording:
    """Parse a landmark JSONL stream into a time-ordered recording.

    Missing-hand frames must be explicit nulls and are retained as gaps.
    Timestamps must be strictly increasing; detected frames must carry
    exactly 21 landmarks.
    """
    frames: list[LandmarkFrame] = []
    last_t = -math.inf
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TrackFormatError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
        if "t" not in rec or "hand" not in rec:
            raise TrackFormatError(f"line {lineno}: frame needs 't' and 'hand' fields")
        t = float(rec["t"])
        if not math.isfinite(t):
            raise TrackFormatError(f"line {lineno}: non-finite timestamp")
        if t <= last_t:
            raise TrackFormatError(
                f"line {lineno}: timestamps must be strictly increasing ({t} after {last_t})"
            )
        last_t = t
        hand = rec["hand"]
        if hand is None:
            landmarks = None
        else:
            arr = np.asarray(hand, dtype=np.float64)
            if arr.shape != (N_LANDMARKS, 2):
                raise TrackFormatError(
                    f"line {lineno}: expected {N_LANDMARKS} [x,y] landmarks, got shape {arr.shape}"
                )
            if not np.all(np.isfinite(arr)):
                raise TrackFormatError(f"line {lineno}: non-finite landmark coordinates")
            arr.flags.writeable = False
            landmarks = arr
        pen = rec.get("pen")
        frames.append(LandmarkFrame(timestamp=t, landmarks=landmarks, pen_flag=pen))

    if not frames:
        raise TrackFormatError("recording has no frames")
    if frame_rate is None:
        if len(frames) > 1:
            dts = np.diff([f.timestamp for f in frames])
            frame_rate = float(1.0 / np.median(dts))
        else:
            frame_rate = 0.0
    return TrackRecording(frames=frames, frame_rate=frame_rate, source=source)


def serialize_landmarks(rec: TrackRecording) -> str:
    """Serialize back to the frame JSONL schema (round-trips with parse_landmarks)."""
    lines = []
    for f in rec.frames:
        obj: dict = {"t": f.timestamp}
        obj["hand"] = None if f.landmarks is None else f.landmarks.tolist()
        if f.pen_flag is not None:
            obj["pen"] = f.pen_flag
        lines.append(json.dumps(obj, separators=(",", ":")))
    return "\n".join(lines) + "\n"


def pen_state(frame: LandmarkFrame, h: PenHeuristic = PenHeuristic()) -> bool:
    """True when drawing. An explicit pen flag wins over the geometry heuristic."""
    if frame.pen_flag is not None:
        return frame.pen_flag
    if frame.landmarks is None:
        raise TrackFormatError("pen_state needs a detected hand")
    wrist = frame.landmarks[WRIST]
    pip = frame.landmarks[INDEX_PIP]
    tip = frame.landmarks[INDEX_TIP]
    d_pip = float(np.linalg.norm(pip - wrist))
    if d_pip == 0.0:
        raise DegenerateGeometryError("wrist and index PIP coincide")
    d_tip = float(np.linalg.norm(tip - wrist))
    return d_tip / d_pip > h.extension_ratio_threshold


def to_sketch(
    rec: TrackRecording,
    h: PenHeuristic = PenHeuristic(),
    canvas: CanvasSpec = CanvasSpec(),
    category: str = "tracking",
    source_id: str = "",
) -> Sketch:
    """Segment the fingertip trajectory into strokes and normalize to the canvas.

    One stroke per maximal pen-down run; missing-hand gaps split strokes.
    Point order follows frame order and the raw trajectory is preserved.
    Raw runs are normalized before Stroke construction because trackers may
    emit coordinates outside the frame, which Stroke would clamp away.
    """
    runs: list[np.ndarray] = []
    current: list[np.ndarray] = []

    def flush() -> None:
        if len(current) >= 2:
            runs.append(np.array(current))
        current.clear()

    for frame in rec.frames:
        if frame.landmarks is None:
            flush()
            continue
        if pen_state(frame, h):
            current.append(frame.landmarks[INDEX_TIP])
        else:
            flush()
    flush()

    if not runs:
        raise EmptySketchError("no pen-down segments in recording")

    allpts = np.concatenate(runs, axis=0)
    lo = allpts.min(axis=0)
    hi = allpts.max(axis=0)
    extent = float(max(hi[0] - lo[0], hi[1] - lo[1]))
    scale = (1.0 - 2.0 * canvas.margin) / extent if extent > 0 else 1.0
    center = (lo + hi) / 2.0
    strokes = [Stroke((run - center) * scale + 0.5) for run in runs]
    sketch = Sketch(strokes=strokes, category=category, source_id=source_id)
    return normalize(sketch, canvas)
