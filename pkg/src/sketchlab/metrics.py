"""Faithfulness metrics: SSIM, Chamfer Distance, report assembly, chaos binning.

SSIM follows the standard 11x11 Gaussian-window formulation; Chamfer
Distance is the symmetric average of directed mean nearest-neighbor
distances between foreground point sets, in pixel units. Neural scores
(LPIPS / CLIP) are never computed here; they are ingested from sidecar
files and passed through.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import (
    ConfigError,
    EmptyForegroundError,
    InsufficientDataError,
    ShapeMismatchError,
)
from .raster import RasterImage, foreground_points


@dataclass(frozen=True)
class MetricsConfig:
    ssim_window: int = 11
    ssim_sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 255.0
    cd_threshold: int = 128

    def __post_init__(self) -> None:
        if self.ssim_window % 2 == 0 or self.ssim_window < 3:
            raise ConfigError(f"ssim window must be odd and >= 3, got {self.ssim_window}")
        if self.k1 <= 0 or self.k2 <= 0 or self.dynamic_range <= 0:
            raise ConfigError("ssim constants must be > 0")
        if not 0 <= self.cd_threshold <= 255:
            raise ConfigError(f"cd_threshold must be in [0,255], got {self.cd_threshold}")


@dataclass
class MetricsReport:
    """Native SSIM/CD plus optional ingested neural scores for one pair."""

    sample_id: str
    ssim: float
    cd: float
    lpips: float | None = None
    clip_i2i: float | None = None
    clip_i2t: float | None = None

    def to_row(self) -> list[str]:
        def cell(v):
            return "" if v is None else repr(v)

        return [self.sample_id, repr(self.ssim), repr(self.cd), cell(self.lpips), cell(self.clip_i2i), cell(self.clip_i2t)]


CSV_HEADER = ["sample_id", "ssim", "cd", "lpips", "clip_i2i", "clip_i2t"]


def _gaussian_kernel(window: int, sigma: float) -> np.ndarray:
    half = (window - 1) / 2.0
    x = np.arange(window) - half
    k = np.exp(-(x**2) / (2.0 * sigma**2))
    return k / k.sum()


def _windowed_mean(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Separable Gaussian-weighted mean over valid windows only."""
    tmp = ndimage.correlate1d(img, kernel, axis=0, mode="constant")
    out = ndimage.correlate1d(tmp, kernel, axis=1, mode="constant")
    half = len(kernel) // 2
    return out[half:-half, half:-half]


def ssim(a: RasterImage, b: RasterImage, cfg: MetricsConfig = MetricsConfig()) -> float:
    """Mean local SSIM over all valid windows with Gaussian weighting."""
    if (a.width, a.height) != (b.width, b.height):
        raise ShapeMismatchError(
            f"image dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    if a.width < cfg.ssim_window or a.height < cfg.ssim_window:
        raise ShapeMismatchError(
            f"images must be at least {cfg.ssim_window} px per side"
        )
    x = a.pixels.astype(np.float64)
    y = b.pixels.astype(np.float64)
    kernel = _gaussian_kernel(cfg.ssim_window, cfg.ssim_sigma)

    mu_x = _windowed_mean(x, kernel)
    mu_y = _windowed_mean(y, kernel)
    sigma_x = _windowed_mean(x * x, kernel) - mu_x * mu_x
    sigma_y = _windowed_mean(y * y, kernel) - mu_y * mu_y
    sigma_xy = _windowed_mean(x * y, kernel) - mu_x * mu_y

    c1 = (cfg.k1 * cfg.dynamic_range) ** 2
    c2 = (cfg.k2 * cfg.dynamic_range) ** 2
    ssim_map = ((2.0 * mu_x * mu_y + c1) * (2.0 * sigma_xy + c2)) / (
        (mu_x * mu_x + mu_y * mu_y + c1) * (sigma_x + sigma_y + c2)
    )
    return float(ssim_map.mean())


def _foreground_or_raise(img: RasterImage, threshold: int, side: str) -> np.ndarray:
    pts = foreground_points(img, threshold)
    if len(pts) == 0:
        raise EmptyForegroundError(f"{side} image has no foreground below {threshold}")
    return pts


def chamfer(a: RasterImage, b: RasterImage, cfg: MetricsConfig = MetricsConfig()) -> float:
    """Symmetric Chamfer Distance in pixels via exact Euclidean distance transforms."""
    if (a.width, a.height) != (b.width, b.height):
        raise ShapeMismatchError(
            f"image dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    pts_a = _foreground_or_raise(a, cfg.cd_threshold, "first")
    pts_b = _foreground_or_raise(b, cfg.cd_threshold, "second")
    # distance_transform_edt measures, at each nonzero cell, the exact
    # Euclidean distance to the nearest zero cell.
    dist_to_b = ndimage.distance_transform_edt(b.pixels >= cfg.cd_threshold)
    dist_to_a = ndimage.distance_transform_edt(a.pixels >= cfg.cd_threshold)
    d_ab = float(dist_to_b[pts_a[:, 1], pts_a[:, 0]].mean())
    d_ba = float(dist_to_a[pts_b[:, 1], pts_b[:, 0]].mean())
    return 0.5 * (d_ab + d_ba)


def chamfer_bruteforce(a: RasterImage, b: RasterImage, cfg: MetricsConfig = MetricsConfig()) -> float:
    """Reference Chamfer Distance via exhaustive nearest-neighbor scan."""
    pts_a = _foreground_or_raise(a, cfg.cd_threshold, "first").astype(np.float64)
    pts_b = _foreground_or_raise(b, cfg.cd_threshold, "second").astype(np.float64)
    if len(pts_a) > 10_000 or len(pts_b) > 10_000:
        raise ConfigError("brute-force chamfer limited to 10^4 foreground points per side")
    diff = pts_a[:, None, :] - pts_b[None, :, :]
    d2 = np.sum(diff * diff, axis=2)
    d_ab = float(np.sqrt(d2.min(axis=1)).mean())
    d_ba = float(np.sqrt(d2.min(axis=0)).mean())
    return 0.5 * (d_ab + d_ba)


def evaluate_pair(
    gt: RasterImage,
    cand: RasterImage,
    cfg: MetricsConfig = MetricsConfig(),
    sample_id: str = "",
    ingested: dict | None = None,
) -> MetricsReport:
    """Native SSIM and CD plus any ingested neural scores, passed through unmodified."""
    ingested = ingested or {}
    return MetricsReport(
        sample_id=sample_id,
        ssim=ssim(gt, cand, cfg),
        cd=chamfer(gt, cand, cfg),
        lpips=ingested.get("lpips"),
        clip_i2i=ingested.get("clip_i2i"),
        clip_i2t=ingested.get("clip_i2t"),
    )


def write_report_csv(path, reports: list[MetricsReport]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for rep in reports:
            writer.writerow(rep.to_row())


def read_report_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [dict(row) for row in csv.DictReader(fh)]


def read_score_sidecar(path) -> dict[str, dict]:
    """Read a neural-score JSONL sidecar keyed by sample_id."""
    scores: dict[str, dict] = {}
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            scores[str(rec["sample_id"])] = rec
    return scores


# ---------------------------------------------------------------------------
# Chaos binning


@dataclass
class BinSummary:
    """Equal-width bins over tracking-CD with per-bin means of both series."""

    edges: list[float]
    counts: list[int]
    mean_tracking_cd: list[float | None]
    mean_generated_cd: list[float | None]
    mode: str = "width"

    def to_dict(self) -> dict:
        bins = []
        for i in range(len(self.counts)):
            bins.append(
                {
                    "lo": self.edges[i],
                    "hi": self.edges[i + 1],
                    "count": self.counts[i],
                    "mean_tracking_cd": self.mean_tracking_cd[i],
                    "mean_generated_cd": self.mean_generated_cd[i],
                }
            )
        return {"mode": self.mode, "n_bins": len(self.counts), "bins": bins}


def chaos_bins(
    records: list[tuple[float, float]], n_bins: int = 4, mode: str = "width"
) -> BinSummary:
    """Bin (tracking_cd, generated_cd) records by tracking-CD and average per bin.

    mode="width" partitions [min, max] into equal-width bins (the maximum
    value lands in the last bin); mode="count" uses equal-count quantile
    bins instead.
    """
    if mode not in ("width", "count"):
        raise ConfigError(f"bin mode must be width|count, got {mode!r}")
    if len(records) < n_bins:
        raise InsufficientDataError(f"need >= {n_bins} records, got {len(records)}")
    tracking = np.array([r[0] for r in records], dtype=np.float64)
    generated = np.array([r[1] for r in records], dtype=np.float64)
    lo, hi = float(tracking.min()), float(tracking.max())

    if mode == "width":
        edges = np.linspace(lo, hi, n_bins + 1)
        width = hi - lo
        if width == 0.0:
            idx = np.zeros(len(tracking), dtype=int)
        else:
            idx = np.minimum(
                (((tracking - lo) / width) * n_bins).astype(int), n_bins - 1
            )
    else:
        edges = np.quantile(tracking, np.linspace(0.0, 1.0, n_bins + 1))
        idx = np.minimum(np.searchsorted(edges[1:-1], tracking, side="right"), n_bins - 1)

    counts, mean_t, mean_g = [], [], []
    for b in range(n_bins):
        sel = idx == b
        n = int(sel.sum())
        counts.append(n)
        mean_t.append(float(tracking[sel].mean()) if n else None)
        mean_g.append(float(generated[sel].mean()) if n else None)
    return BinSummary(
        edges=[float(e) for e in edges],
        counts=counts,
        mean_tracking_cd=mean_t,
        mean_generated_cd=mean_g,
        mode=mode,
    )
