"""Corruption augmentations that turn clean sketches into tracking-like distorted ones.

Seven sub-augmentations fire independently per sample (stroke translation and
stroke resize are mutually exclusive), each seeded from a per-sample seed so
identical (sketch, config, seed) always yields bit-identical output. Every
applied sub-augmentation is recorded in an AugmentReport that suffices to
replay the exact result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from . import rng
from .errors import ConfigError, ExclusivityError
from .sketch import Sketch, Stroke, bounds, resample_arclength

TWO_PI = 2.0 * math.pi

# Firing-draw order; fixed so streams never depend on configuration.
SUB_NAMES = (
    "wave",
    "spike",
    "jitter",
    "sketch_distort",
    "misplace",
    "resize",
    "false_strokes",
    "erase",
)


def _check_interval(name: str, lo: float, hi: float, low_bound: float = 0.0) -> None:
    if lo < low_bound or hi < lo:
        raise ConfigError(f"{name} must satisfy {low_bound} <= lo <= hi, got ({lo}, {hi})")


@dataclass(frozen=True)
class WaveParams:
    """Superposed sine waves displacing vertices along the local normal."""

    n_waves_range: tuple[int, int] = (2, 5)
    freq_range: tuple[float, float] = (0.5, 4.0)  # cycles per stroke
    amp_range: tuple[float, float] = (0.005, 0.02)  # canvas units
    phase_range: tuple[float, float] = (0.0, TWO_PI)

    def validate(self) -> None:
        if self.n_waves_range[0] < 1 or self.n_waves_range[1] < self.n_waves_range[0]:
            raise ConfigError(f"n_waves_range invalid: {self.n_waves_range}")
        _check_interval("freq_range", *self.freq_range)
        _check_interval("amp_range", *self.amp_range)
        _check_interval("phase_range", *self.phase_range)


@dataclass(frozen=True)
class SpikeParams:
    """Glitch excursions: sharp triangles or smooth Bezier bumps."""

    mode: str = "mixed"  # sharp | smooth | mixed
    height_mean: float = 0.03
    height_sigma: float = 0.01
    width_mean: float = 0.01
    width_sigma: float = 0.005
    bezier_offset_range: tuple[float, float] = (0.01, 0.05)
    max_per_stroke: int = 2

    def validate(self) -> None:
        if self.mode not in ("sharp", "smooth", "mixed"):
            raise ConfigError(f"spike mode must be sharp|smooth|mixed, got {self.mode!r}")
        if self.height_sigma < 0 or self.width_sigma < 0:
            raise ConfigError("spike distribution sigmas must be >= 0")
        if self.max_per_stroke < 0:
            raise ConfigError("max_per_stroke must be >= 0")
        _check_interval("bezier_offset_range", *self.bezier_offset_range)


@dataclass(frozen=True)
class JitterParams:
    """Per-vertex Gaussian perturbation of a random vertex subset."""

    sigma: float = 0.003
    vertex_fraction_range: tuple[float, float] = (0.3, 0.7)

    def validate(self) -> None:
        if self.sigma < 0:
            raise ConfigError(f"jitter sigma must be >= 0, got {self.sigma}")
        lo, hi = self.vertex_fraction_range
        if not (0.0 <= lo <= hi <= 1.0):
            raise ConfigError(f"vertex_fraction_range must be within [0,1]: {lo},{hi}")


@dataclass(frozen=True)
class StructParams:
    """Sketch-level aspect distortion plus per-stroke translation/resize ranges."""

    scale_range: tuple[float, float] = (0.7, 1.0)  # per-axis factor
    stroke_translate_range: tuple[float, float] = (-0.05, 0.05)  # canvas units
    stroke_scale_range: tuple[float, float] = (0.8, 1.25)

    def validate(self) -> None:
        if self.scale_range[0] <= 0 or self.scale_range[1] < self.scale_range[0]:
            raise ConfigError(f"scale_range invalid: {self.scale_range}")
        if self.stroke_translate_range[1] < self.stroke_translate_range[0]:
            raise ConfigError(f"stroke_translate_range invalid: {self.stroke_translate_range}")
        if self.stroke_scale_range[0] <= 0 or self.stroke_scale_range[1] < self.stroke_scale_range[0]:
            raise ConfigError(f"stroke_scale_range invalid: {self.stroke_scale_range}")


@dataclass(frozen=True)
class FalseStrokeParams:
    """Unintended lines: stroke-transition connectors and random extra lines."""

    transitional: bool = True
    random_count_max: int = 3
    placement_inflate: float = 0.1  # bbox inflation fraction for random lines

    def validate(self) -> None:
        if self.random_count_max < 0:
            raise ConfigError("random_count_max must be >= 0")
        if self.placement_inflate < 0:
            raise ConfigError("placement_inflate must be >= 0")


@dataclass(frozen=True)
class EraseParams:
    """Random erasure: drop a whole stroke or cut an arc out of one."""

    arc_fraction_range: tuple[float, float] = (0.1, 0.5)
    whole_stroke_prob: float = 0.3

    def validate(self) -> None:
        lo, hi = self.arc_fraction_range
        if not (0.0 <= lo <= hi <= 1.0):
            raise ConfigError(f"arc_fraction_range must be within [0,1]: {lo},{hi}")
        if not 0.0 <= self.whole_stroke_prob <= 1.0:
            raise ConfigError("whole_stroke_prob must be in [0,1]")


@dataclass(frozen=True)
class AugmentConfig:
    """Full augmentation parameter space with per-sub-augmentation firing probabilities."""

    prob_wave: float = 0.5
    prob_spike: float = 0.5
    prob_jitter: float = 0.5
    prob_sketch_distort: float = 0.5
    prob_misplace: float = 0.5
    prob_resize: float = 0.5
    prob_false_strokes: float = 0.5
    prob_erase: float = 0.5
    erase_enabled: bool = False
    resample_spacing: float = 0.01
    wave: WaveParams = field(default_factory=WaveParams)
    spike: SpikeParams = field(default_factory=SpikeParams)
    jitter: JitterParams = field(default_factory=JitterParams)
    struct: StructParams = field(default_factory=StructParams)
    false_strokes: FalseStrokeParams = field(default_factory=FalseStrokeParams)
    erase: EraseParams = field(default_factory=EraseParams)

    def probability(self, name: str) -> float:
        return getattr(self, f"prob_{name}")

    def validate(self) -> None:
        for name in SUB_NAMES:
            p = self.probability(name)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"prob_{name} must be in [0,1], got {p}")
        if self.resample_spacing <= 0:
            raise ConfigError("resample_spacing must be > 0")
        for sub in (self.wave, self.spike, self.jitter, self.struct, self.false_strokes, self.erase):
            sub.validate()


def identity_config() -> AugmentConfig:
    """All firing probabilities zero; apply() becomes the identity."""
    return AugmentConfig(
        prob_wave=0.0,
        prob_spike=0.0,
        prob_jitter=0.0,
        prob_sketch_distort=0.0,
        prob_misplace=0.0,
        prob_resize=0.0,
        prob_false_strokes=0.0,
        prob_erase=0.0,
    )


@dataclass
class AugmentReport:
    """What fired for one sample, with the sampled parameters needed for replay."""

    seed: int
    fired: list[str] = field(default_factory=list)
    subs: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def record(self, name: str, sub_seed: int, params: dict) -> None:
        self.fired.append(name)
        self.subs.append({"name": name, "seed": sub_seed, "params": params})

    def to_dict(self) -> dict:
        return {"seed": self.seed, "fired": list(self.fired), "subs": self.subs, "notes": self.notes}

    @classmethod
    def from_dict(cls, d: dict) -> "AugmentReport":
        return cls(seed=d["seed"], fired=list(d["fired"]), subs=list(d["subs"]), notes=list(d.get("notes", [])))


# ---------------------------------------------------------------------------
# Geometry helpers


def _clip_stroke(pts: np.ndarray) -> Stroke:
    return Stroke(np.clip(pts, 0.0, 1.0))


def _arc_lengths(pts: np.ndarray) -> np.ndarray:
    """Cumulative arc length per vertex, starting at 0."""
    d = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(d)])


def _unit_normals(pts: np.ndarray) -> np.ndarray:
    """Per-vertex unit normals from central-difference tangents."""
    tangents = np.empty_like(pts)
    tangents[1:-1] = pts[2:] - pts[:-2]
    tangents[0] = pts[1] - pts[0]
    tangents[-1] = pts[-1] - pts[-2]
    norms = np.linalg.norm(tangents, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    tangents /= norms
    return np.column_stack([-tangents[:, 1], tangents[:, 0]])


def _point_at(pts: np.ndarray, cum: np.ndarray, s: float) -> np.ndarray:
    """Point at arc length s along the polyline."""
    x = np.interp(s, cum, pts[:, 0])
    y = np.interp(s, cum, pts[:, 1])
    return np.array([x, y])


# ---------------------------------------------------------------------------
# Sub-augmentations


def sample_waves(p: WaveParams, gen: np.random.Generator) -> list[tuple[float, float, float]]:
    """Draw (amplitude, frequency, phase) triples for one stroke."""
    n = int(gen.integers(p.n_waves_range[0], p.n_waves_range[1] + 1))
    waves = []
    for _ in range(n):
        amp = float(gen.uniform(*p.amp_range))
        freq = float(gen.uniform(*p.freq_range))
        phase = float(gen.uniform(*p.phase_range))
        waves.append((amp, freq, phase))
    return waves


def wave_displace(st: Stroke, waves: list[tuple[float, float, float]]) -> Stroke:
    """Displace each vertex along its local normal by sum_i A_i sin(2*pi*f_i*t + phi_i).

    t is the vertex position as a fraction of total stroke arc length.
    """
    pts = st.points.copy()
    if len(pts) < 2:
        return Stroke(pts)
    cum = _arc_lengths(pts)
    total = cum[-1]
    if total == 0:
        return Stroke(pts)
    t = cum / total
    d = np.zeros(len(pts))
    for amp, freq, phase in waves:
        d += amp * np.sin(TWO_PI * freq * t + phase)
    return _clip_stroke(pts + d[:, None] * _unit_normals(pts))


def distort_stroke_wave(st: Stroke, p: WaveParams, seed: int) -> Stroke:
    """Seeded wave distortion of one stroke (expects a densely resampled stroke)."""
    return wave_displace(st, sample_waves(p, rng.stream(seed, rng.TAG_WAVE)))


def _sample_spike(
    pts: np.ndarray, p: SpikeParams, gen: np.random.Generator, spacing: float
) -> tuple[np.ndarray, dict | None]:
    """Insert one spike into the polyline; returns (new polyline, descriptor)."""
    cum = _arc_lengths(pts)
    total = cum[-1]
    height = abs(float(gen.normal(p.height_mean, p.height_sigma)))
    width = abs(float(gen.normal(p.width_mean, p.width_sigma)))
    mode = p.mode
    if mode == "mixed":
        mode = "sharp" if gen.uniform() < 0.5 else "smooth"
    if total <= width or width == 0.0:
        return pts, None
    pos = float(gen.uniform(width / 2.0, total - width / 2.0))
    side = 1.0 if gen.uniform() < 0.5 else -1.0
    offsets = (
        float(gen.uniform(*p.bezier_offset_range)),
        float(gen.uniform(*p.bezier_offset_range)),
    )

    s0, s1 = pos - width / 2.0, pos + width / 2.0
    a = _point_at(pts, cum, s0)
    b = _point_at(pts, cum, s1)
    mid = _point_at(pts, cum, pos)
    seg = b - a
    seg_len = float(np.linalg.norm(seg))
    if seg_len == 0:
        return pts, None
    normal = np.array([-seg[1], seg[0]]) / seg_len * side

    if mode == "sharp":
        apex = mid + height * normal
        curve = [a, apex, b]
        excursion = _densify(np.array(curve), spacing)
    else:
        c1 = a + seg / 3.0 + offsets[0] * normal
        c2 = a + 2.0 * seg / 3.0 + offsets[1] * normal
        excursion = _bezier_points(a, c1, c2, b, spacing)

    before = pts[cum <= s0]
    after = pts[cum >= s1]
    new_pts = np.concatenate([before, excursion, after], axis=0)
    desc = {
        "mode": mode,
        "pos": pos,
        "height": height,
        "width": width,
        "side": side,
        "offsets": list(offsets),
    }
    return new_pts, desc


def _densify(pts: np.ndarray, spacing: float) -> np.ndarray:
    """Subdivide polyline segments to at most `spacing` apart."""
    out = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        seg_len = math.hypot(b[0] - a[0], b[1] - a[1])
        n = max(1, math.ceil(seg_len / spacing))
        if n > 1:
            t = np.arange(1, n)[:, None] / n
            out.extend(a + t * (b - a))
        out.append(b)
    return np.array(out)


def _bezier_points(p0, c1, c2, p3, spacing: float) -> np.ndarray:
    """Cubic Bezier sampled densely enough that chord gaps stay below `spacing`.

    |B'(t)| <= 3 * control polygon length, so n = 3 * ceil(len / spacing)
    bounds every chord by `spacing`.
    """
    poly_len = (
        np.linalg.norm(c1 - p0) + np.linalg.norm(c2 - c1) + np.linalg.norm(p3 - c2)
    )
    n = max(8, 3 * math.ceil(poly_len / spacing))
    t = np.linspace(0.0, 1.0, n + 1)[:, None]
    u = 1.0 - t
    return u**3 * p0 + 3 * u**2 * t * c1 + 3 * u * t**2 * c2 + t**3 * p3


def add_spike(st: Stroke, p: SpikeParams, seed: int, spacing: float = 0.01) -> tuple[Stroke, list[dict]]:
    """Insert up to max_per_stroke spikes; too-short strokes come back unchanged."""
    if p.max_per_stroke == 0:
        return st, []
    gen = rng.stream(seed, rng.TAG_SPIKE)
    n_spikes = int(gen.integers(1, p.max_per_stroke + 1))
    pts = st.points
    descs = []
    for _ in range(n_spikes):
        pts, desc = _sample_spike(pts, p, gen, spacing)
        if desc is not None:
            descs.append(desc)
    if not descs:
        return st, []
    return _clip_stroke(pts), descs


def add_jitter(st: Stroke, p: JitterParams, seed: int, fraction: float | None = None) -> Stroke:
    """Perturb a seeded random subset of vertices by iid normal(0, sigma^2) per axis."""
    gen = rng.stream(seed, rng.TAG_JITTER)
    if fraction is None:
        fraction = float(gen.uniform(*p.vertex_fraction_range))
    n = len(st)
    k = int(round(fraction * n))
    if k == 0 or p.sigma == 0.0:
        return st
    idx = gen.choice(n, size=k, replace=False)
    pts = st.points.copy()
    pts[idx] += gen.normal(0.0, p.sigma, size=(k, 2))
    return _clip_stroke(pts)


def structural_transform(
    s: Sketch, p: StructParams, seed: int, fire: set[str]
) -> tuple[Sketch, dict]:
    """Apply the structural artifacts named in `fire`.

    sketch_distort rescales both axes independently and repositions the
    sketch; misplace translates each stroke; resize rescales each stroke
    about its centroid. misplace and resize are mutually exclusive.
    """
    if "misplace" in fire and "resize" in fire:
        raise ExclusivityError("misplace and resize cannot fire together")
    params: dict = {}
    strokes = list(s.strokes)

    if "sketch_distort" in fire:
        gen = rng.stream(seed, rng.TAG_SKETCH_DISTORT)
        sx = float(gen.uniform(*p.scale_range))
        sy = float(gen.uniform(*p.scale_range))
        lo, hi = bounds(s)
        cx, cy = (lo.x + hi.x) / 2.0, (lo.y + hi.y) / 2.0
        w = (hi.x - lo.x) * sx
        h = (hi.y - lo.y) * sy
        # New center sampled anywhere the scaled bbox still fits the canvas.
        nx = float(gen.uniform(w / 2.0, 1.0 - w / 2.0)) if w < 1.0 else 0.5
        ny = float(gen.uniform(h / 2.0, 1.0 - h / 2.0)) if h < 1.0 else 0.5
        strokes = [
            _clip_stroke((st.points - (cx, cy)) * (sx, sy) + (nx, ny)) for st in strokes
        ]
        params["sketch_distort"] = {"sx": sx, "sy": sy, "center": [nx, ny]}

    if "misplace" in fire:
        gen = rng.stream(seed, rng.TAG_MISPLACE)
        offsets = gen.uniform(*p.stroke_translate_range, size=(len(strokes), 2))
        strokes = [_clip_stroke(st.points + off) for st, off in zip(strokes, offsets)]
        params["misplace"] = {"offsets": offsets.tolist()}

    if "resize" in fire:
        gen = rng.stream(seed, rng.TAG_RESIZE)
        factors = gen.uniform(*p.stroke_scale_range, size=len(strokes))
        out = []
        for st, f in zip(strokes, factors):
            c = st.points.mean(axis=0)
            out.append(_clip_stroke((st.points - c) * f + c))
        strokes = out
        params["resize"] = {"factors": factors.tolist()}

    return s.with_strokes(strokes), params


def add_false_strokes(s: Sketch, p: FalseStrokeParams, seed: int) -> tuple[Sketch, dict]:
    """Append transition connectors and/or random extra lines, flagged in the report."""
    gen = rng.stream(seed, rng.TAG_FALSE_STROKES)
    strokes = list(s.strokes)
    n_orig = len(strokes)
    added_transitional = 0
    random_lines: list[list[float]] = []

    if p.transitional:
        for a, b in zip(s.strokes[:-1], s.strokes[1:]):
            strokes.append(Stroke(np.array([a.points[-1], b.points[0]])))
            added_transitional += 1

    if p.random_count_max > 0:
        lo, hi = bounds(s)
        w, h = hi.x - lo.x, hi.y - lo.y
        x0 = max(0.0, lo.x - p.placement_inflate * w)
        x1 = min(1.0, hi.x + p.placement_inflate * w)
        y0 = max(0.0, lo.y - p.placement_inflate * h)
        y1 = min(1.0, hi.y + p.placement_inflate * h)
        count = int(gen.integers(1, p.random_count_max + 1))
        for _ in range(count):
            xs = gen.uniform(x0, x1, size=2)
            ys = gen.uniform(y0, y1, size=2)
            line = np.array([[xs[0], ys[0]], [xs[1], ys[1]]])
            strokes.append(Stroke(line))
            random_lines.append(line.ravel().tolist())

    params = {
        "first_false_index": n_orig,
        "transitional": added_transitional,
        "random": random_lines,
    }
    return s.with_strokes(strokes), params


def random_erase(s: Sketch, p: EraseParams, seed: int) -> tuple[Sketch, dict]:
    """Remove one whole stroke or cut a contiguous arc out of one stroke."""
    gen = rng.stream(seed, rng.TAG_ERASE)
    strokes = list(s.strokes)
    whole = gen.uniform() < p.whole_stroke_prob
    fallback = False
    if whole and len(strokes) < 2:
        whole = False
        fallback = True

    if whole:
        idx = int(gen.integers(0, len(strokes)))
        del strokes[idx]
        return s.with_strokes(strokes), {"mode": "whole", "stroke": idx, "fallback": False}

    idx = int(gen.integers(0, len(strokes)))
    frac = float(gen.uniform(*p.arc_fraction_range))
    st = strokes[idx]
    pts = st.points
    cum = _arc_lengths(pts)
    total = cum[-1]
    params = {"mode": "arc", "stroke": idx, "fraction": frac, "fallback": fallback}
    if frac == 0.0 or total == 0.0:
        return s.with_strokes(strokes), params

    cut = frac * total
    start = float(gen.uniform(0.0, total - cut))
    end = start + cut
    params["span"] = [start, end]

    pieces = []
    head = pts[cum < start]
    if start > 0:
        head = np.concatenate([head, [_point_at(pts, cum, start)]], axis=0)
    tail = pts[cum > end]
    if end < total:
        tail = np.concatenate([[_point_at(pts, cum, end)], tail], axis=0)
    if len(head) >= 2:
        pieces.append(Stroke(head))
    if len(tail) >= 2:
        pieces.append(Stroke(tail))
    strokes[idx : idx + 1] = pieces
    if not strokes:
        # Arc cut consumed the only stroke entirely; keep the original.
        return s.with_strokes(list(s.strokes)), {**params, "skipped": "would empty sketch"}
    return s.with_strokes(strokes), params


# ---------------------------------------------------------------------------
# Orchestration


def _draw_firings(cfg: AugmentConfig, seed: int) -> tuple[list[str], dict]:
    """Decide which sub-augmentations fire; resolves misplace/resize exclusivity."""
    gen = rng.stream(seed, rng.TAG_FIRE)
    draws = gen.uniform(size=len(SUB_NAMES))
    fired = {
        name: bool(draws[i] < cfg.probability(name)) for i, name in enumerate(SUB_NAMES)
    }
    if not cfg.erase_enabled:
        fired["erase"] = False
    dropped = None
    if fired["misplace"] and fired["resize"]:
        keep_misplace = gen.uniform() < 0.5
        dropped = "resize" if keep_misplace else "misplace"
        fired[dropped] = False
    order = [name for name in SUB_NAMES if fired[name]]
    return order, {"exclusivity_dropped": dropped}


def apply(s: Sketch, cfg: AugmentConfig, seed: int) -> tuple[Sketch, AugmentReport]:
    """Corrupt one normalized sketch; bit-identical for identical (s, cfg, seed)."""
    cfg.validate()
    fired, fire_info = _draw_firings(cfg, seed)
    report = AugmentReport(seed=seed)
    if fire_info["exclusivity_dropped"]:
        report.notes.append(f"exclusivity dropped {fire_info['exclusivity_dropped']}")
    if not fired:
        return s, report

    out = s
    local = [n for n in ("wave", "spike", "jitter") if n in fired]
    if local:
        out = out.with_strokes(
            [resample_arclength(st, cfg.resample_spacing) for st in out.strokes]
        )

    if "wave" in fired:
        waves_per_stroke = []
        strokes = []
        for i, st in enumerate(out.strokes):
            gen = rng.stream(seed, rng.TAG_WAVE, i)
            waves = sample_waves(cfg.wave, gen)
            strokes.append(wave_displace(st, waves))
            waves_per_stroke.append([list(w) for w in waves])
        out = out.with_strokes(strokes)
        report.record("wave", seed, {"strokes": waves_per_stroke})

    if "spike" in fired:
        strokes = []
        all_descs = []
        for i, st in enumerate(out.strokes):
            new_st, descs = add_spike(st, cfg.spike, _stroke_seed(seed, rng.TAG_SPIKE, i), cfg.resample_spacing)
            strokes.append(new_st)
            for d in descs:
                all_descs.append({**d, "stroke": i})
            if not descs and cfg.spike.max_per_stroke > 0:
                report.notes.append(f"spike skipped on stroke {i}: too short")
        out = out.with_strokes(strokes)
        report.record("spike", seed, {"spikes": all_descs})

    if "jitter" in fired:
        gen = rng.stream(seed, rng.TAG_JITTER)
        fraction = float(gen.uniform(*cfg.jitter.vertex_fraction_range))
        strokes = [
            add_jitter(st, cfg.jitter, _stroke_seed(seed, rng.TAG_JITTER, i), fraction)
            for i, st in enumerate(out.strokes)
        ]
        out = out.with_strokes(strokes)
        report.record("jitter", seed, {"sigma": cfg.jitter.sigma, "fraction": fraction})

    struct_fire = {n for n in ("sketch_distort", "misplace", "resize") if n in fired}
    if struct_fire:
        out, params = structural_transform(out, cfg.struct, seed, struct_fire)
        for name in ("sketch_distort", "misplace", "resize"):
            if name in params:
                report.record(name, seed, params[name])

    if "erase" in fired:
        out, params = random_erase(out, cfg.erase, seed)
        report.record("erase", seed, params)

    if "false_strokes" in fired:
        out, params = add_false_strokes(out, cfg.false_strokes, seed)
        report.record("false_strokes", seed, params)

    return out, report


def _stroke_seed(seed: int, tag: int, stroke_idx: int) -> int:
    """Per-stroke sub-seed; keeps add_* callable with a plain (seed, tag) stream."""
    return int(
        np.random.SeedSequence((seed, tag, stroke_idx)).generate_state(1, np.uint64)[0]
    )


def replay(s: Sketch, cfg: AugmentConfig, report: AugmentReport) -> Sketch:
    """Re-execute the sub-augmentations recorded in `report`; reproduces apply() exactly."""
    out = s
    local = [e for e in report.fired if e in ("wave", "spike", "jitter")]
    if local:
        out = out.with_strokes(
            [resample_arclength(st, cfg.resample_spacing) for st in out.strokes]
        )
    seed = report.seed
    for entry in report.subs:
        name = entry["name"]
        if name == "wave":
            strokes = [
                wave_displace(st, [tuple(w) for w in entry["params"]["strokes"][i]])
                for i, st in enumerate(out.strokes)
            ]
            out = out.with_strokes(strokes)
        elif name == "spike":
            strokes = [
                add_spike(st, cfg.spike, _stroke_seed(seed, rng.TAG_SPIKE, i), cfg.resample_spacing)[0]
                for i, st in enumerate(out.strokes)
            ]
            out = out.with_strokes(strokes)
        elif name == "jitter":
            fraction = entry["params"]["fraction"]
            strokes = [
                add_jitter(st, cfg.jitter, _stroke_seed(seed, rng.TAG_JITTER, i), fraction)
                for i, st in enumerate(out.strokes)
            ]
            out = out.with_strokes(strokes)
        elif name in ("sketch_distort", "misplace", "resize"):
            out, _ = structural_transform(out, cfg.struct, seed, {name})
        elif name == "erase":
            out, _ = random_erase(out, cfg.erase, seed)
        elif name == "false_strokes":
            out, _ = add_false_strokes(out, cfg.false_strokes, seed)
    return out


# ---------------------------------------------------------------------------
# Plain-text config serialization (key = value)


def config_to_text(cfg: AugmentConfig) -> str:
    """Serialize to the documented key = value format."""
    lines = ["# sketchlab augmentation config"]
    flat = _flatten("augment", asdict(cfg))
    for key, value in flat:
        lines.append(f"{key} = {_fmt_value(value)}")
    return "\n".join(lines) + "\n"


def _flatten(prefix: str, d: dict) -> list[tuple[str, object]]:
    items: list[tuple[str, object]] = []
    for k, v in d.items():
        key = f"{prefix}.{k}"
        if isinstance(v, dict):
            items.extend(_flatten(key, v))
        else:
            items.append((key, v))
    return items


def _fmt_value(v: object) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (tuple, list)):
        return ", ".join(repr(x) for x in v)
    if isinstance(v, str):
        return v
    return repr(v)


def parse_config_text(text: str) -> dict[str, str]:
    """Parse key = value lines; '#' starts a comment, blank lines ignored."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def config_from_mapping(mapping: dict[str, str]) -> AugmentConfig:
    """Build an AugmentConfig from flat augment.* keys; unknown keys are rejected."""
    base = asdict(AugmentConfig())
    for key, raw in mapping.items():
        if not key.startswith("augment."):
            continue
        path = key.split(".")[1:]
        node = base
        for part in path[:-1]:
            if part not in node or not isinstance(node[part], dict):
                raise ConfigError(f"unknown config key: {key}")
            node = node[part]
        leaf = path[-1]
        if leaf not in node:
            raise ConfigError(f"unknown config key: {key}")
        node[leaf] = _coerce(raw, node[leaf])
    return AugmentConfig(
        **{
            **{k: v for k, v in base.items() if not isinstance(v, dict)},
            "wave": WaveParams(**{
                **base["wave"],
                "n_waves_range": tuple(base["wave"]["n_waves_range"]),
                "freq_range": tuple(base["wave"]["freq_range"]),
                "amp_range": tuple(base["wave"]["amp_range"]),
                "phase_range": tuple(base["wave"]["phase_range"]),
            }),
            "spike": SpikeParams(**{
                **base["spike"],
                "bezier_offset_range": tuple(base["spike"]["bezier_offset_range"]),
            }),
            "jitter": JitterParams(**{
                **base["jitter"],
                "vertex_fraction_range": tuple(base["jitter"]["vertex_fraction_range"]),
            }),
            "struct": StructParams(**{
                **base["struct"],
                "scale_range": tuple(base["struct"]["scale_range"]),
                "stroke_translate_range": tuple(base["struct"]["stroke_translate_range"]),
                "stroke_scale_range": tuple(base["struct"]["stroke_scale_range"]),
            }),
            "false_strokes": FalseStrokeParams(**base["false_strokes"]),
            "erase": EraseParams(**{
                **base["erase"],
                "arc_fraction_range": tuple(base["erase"]["arc_fraction_range"]),
            }),
        }
    )


def config_from_text(text: str) -> AugmentConfig:
    cfg = config_from_mapping(parse_config_text(text))
    cfg.validate()
    return cfg


def _coerce(raw: str, template: object):
    """Coerce a raw config string to the type of the default it replaces."""
    if isinstance(template, bool):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"expected boolean, got {raw!r}")
    if isinstance(template, (tuple, list)):
        parts = [p.strip() for p in raw.split(",")]
        if len(parts) != len(template):
            raise ConfigError(f"expected {len(template)} comma-separated values, got {raw!r}")
        return tuple(_coerce(p, t) for p, t in zip(parts, template))
    if isinstance(template, int):
        return int(raw)
    if isinstance(template, float):
        return float(raw)
    return raw
