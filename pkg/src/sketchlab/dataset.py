"""Dataset construction: corruption pairs with prompts and manifests, top-percent
corpus filtering by ingested CLIP scores, and the K-means category holdout split."""

from __future__ import annotations

import json
import logging
import math
import multiprocessing
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import rng
from .augment import AugmentConfig, apply, config_to_text
from .errors import ConfigError, IncompleteStatsError
from .raster import RenderSpec, render, to_png_bytes
from .sketch import Sketch

log = logging.getLogger(__name__)

MANIFEST_SCHEMA_VERSION = 1

PROMPT_TEMPLATE = "a black and white sketch of a {category}"

FEATURE_NAMES = ("clip_i2t_gt", "clip_i2i_gt_tracking", "cd_gt_tracking", "ssim_gt_tracking")


def make_prompt(category: str) -> str:
    """Literal prompt template; no article correction."""
    if not category:
        raise ConfigError("category must be non-empty")
    return PROMPT_TEMPLATE.format(category=category)


def filter_top_percent(
    scored: dict[str, list[tuple[str, float]]], fraction: float = 0.05
) -> list[str]:
    """Select the top `fraction` of ids per category by score.

    Sort is by score descending with ties broken by id ascending, and the
    cut keeps ceil(fraction * n) entries, so selection is deterministic.
    """
    if not 0.0 < fraction <= 1.0:
        raise ConfigError(f"fraction must be in (0, 1], got {fraction}")
    if not scored:
        log.warning("filter_top_percent: empty category list, empty selection")
        return []
    selected: list[str] = []
    for category in sorted(scored):
        entries = scored[category]
        for sid, score in entries:
            if not math.isfinite(score):
                raise ConfigError(f"non-finite score for {sid!r} in {category!r}")
        ranked = sorted(entries, key=lambda e: (-e[1], e[0]))
        keep = math.ceil(fraction * len(ranked))
        selected.extend(sid for sid, _ in ranked[:keep])
    return selected


# ---------------------------------------------------------------------------
# K-means and the holdout split


def kmeans(
    points: np.ndarray, k: int, seed: int, max_iters: int = 100
) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd's algorithm with k-means++ seeding.

    Runs to an assignment fixpoint or max_iters; an emptied cluster is
    reseeded with the point farthest from its assigned centroid. Returns
    (assignment, centroids).
    """
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if n < k:
        raise ConfigError(f"need at least k={k} points, got {n}")
    gen = rng.stream(seed, 0)

    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[gen.integers(n)]
    d2 = np.sum((points - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total == 0.0:
            idx = int(gen.integers(n))
        else:
            idx = int(gen.choice(n, p=d2 / total))
        centroids[j] = points[idx]
        d2 = np.minimum(d2, np.sum((points - centroids[j]) ** 2, axis=1))

    assignment = np.full(n, -1, dtype=int)
    for _ in range(max_iters):
        dists = np.sum((points[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        new_assignment = dists.argmin(axis=1)
        for j in range(k):
            sel = new_assignment == j
            if sel.any():
                centroids[j] = points[sel].mean(axis=0)
            else:
                farthest = int(np.argmax(dists[np.arange(n), new_assignment]))
                centroids[j] = points[farthest]
                new_assignment[farthest] = j
        if np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
    return assignment, centroids


@dataclass(frozen=True)
class CategoryStats:
    """Per-category feature vector of mean similarity statistics."""

    category: str
    clip_i2t_gt: float
    clip_i2i_gt_tracking: float
    cd_gt_tracking: float
    ssim_gt_tracking: float

    def vector(self) -> np.ndarray:
        return np.array(
            [self.clip_i2t_gt, self.clip_i2i_gt_tracking, self.cd_gt_tracking, self.ssim_gt_tracking]
        )


@dataclass
class HoldoutSplit:
    held_out: list[str]
    clusters: dict[str, int]

    def to_dict(self) -> dict:
        return {"held_out": self.held_out, "clusters": self.clusters}


def holdout_kmeans(stats: list[CategoryStats], k: int = 10, seed: int = 0) -> HoldoutSplit:
    """Cluster categories by feature vector and sample one held-out category per cluster.

    Features are z-scored per dimension before clustering so no single
    statistic dominates.
    """
    if len(stats) < k:
        raise ConfigError(f"need at least {k} categories with stats, got {len(stats)}")
    offenders = [
        s.category for s in stats if not np.all(np.isfinite(s.vector()))
    ]
    seen: set[str] = set()
    for s in stats:
        if s.category in seen:
            raise IncompleteStatsError(f"duplicate stats for category {s.category!r}")
        seen.add(s.category)
    if offenders:
        raise IncompleteStatsError(f"non-finite stats for: {', '.join(sorted(offenders))}")

    stats = sorted(stats, key=lambda s: s.category)
    matrix = np.stack([s.vector() for s in stats])
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0)
    std[std == 0] = 1.0
    assignment, _ = kmeans((matrix - mean) / std, k=k, seed=seed)

    gen = rng.stream(seed, 1)
    held_out = []
    for j in range(k):
        members = [stats[i].category for i in range(len(stats)) if assignment[i] == j]
        held_out.append(members[int(gen.integers(len(members)))])
    clusters = {stats[i].category: int(assignment[i]) for i in range(len(stats))}
    return HoldoutSplit(held_out=sorted(held_out), clusters=clusters)


def load_category_stats(path) -> list[CategoryStats]:
    """Read per-category stats JSONL: {category, clip_i2t_gt, clip_i2i_gt_tracking, cd_gt_tracking, ssim_gt_tracking}."""
    out = []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            missing = [f for f in FEATURE_NAMES if f not in rec]
            if missing:
                raise IncompleteStatsError(
                    f"category {rec.get('category', '?')!r} missing: {', '.join(missing)}"
                )
            out.append(
                CategoryStats(
                    category=str(rec["category"]),
                    **{f: float(rec[f]) for f in FEATURE_NAMES},
                )
            )
    return out


# ---------------------------------------------------------------------------
# Pair building


@dataclass
class ManifestEntry:
    sample_id: str
    category: str
    prompt: str
    clean_path: str
    noisy_path: str
    seed: int
    augment_report: dict
    empty_prompt: bool = False

    def to_dict(self) -> dict:
        return {
            "schema_version": MANIFEST_SCHEMA_VERSION,
            "sample_id": self.sample_id,
            "category": self.category,
            "prompt": self.prompt,
            "clean_path": self.clean_path,
            "noisy_path": self.noisy_path,
            "seed": self.seed,
            "empty_prompt": self.empty_prompt,
            "augment_report": self.augment_report,
        }


def slugify(text: str) -> str:
    slug = re.sub(r"[^a-zA-Z0-9]+", "-", text).strip("-").lower()
    return slug or "x"


def _build_one(args) -> tuple[int, bytes, bytes, dict]:
    index, sketch, aug_cfg, render_spec, global_seed = args
    seed = rng.sample_seed(global_seed, index)
    noisy, report = apply(sketch, aug_cfg, seed)
    clean_png = to_png_bytes(render(sketch, render_spec))
    noisy_png = to_png_bytes(render(noisy, render_spec))
    return index, clean_png, noisy_png, report.to_dict()


def build_pairs(
    corpus: list[Sketch],
    aug_cfg: AugmentConfig,
    render_spec: RenderSpec,
    out_dir,
    global_seed: int,
    threads: int = 1,
    empty_prompt_fraction: float = 0.0,
    extra_snapshot: dict | None = None,
) -> list[ManifestEntry]:
    """Write clean/noisy PNG pairs, a JSONL manifest, and a config snapshot.

    Sample i is corrupted with seed hash(global_seed, i), so outputs are
    byte-identical for identical inputs and seed, for any thread count.
    """
    if not corpus:
        raise ConfigError("corpus is empty")
    if not 0.0 <= empty_prompt_fraction <= 1.0:
        raise ConfigError("empty_prompt_fraction must be in [0,1]")
    aug_cfg.validate()
    out_dir = Path(out_dir)
    images = out_dir / "images"
    images.mkdir(parents=True, exist_ok=True)

    tasks = [(i, s, aug_cfg, render_spec, global_seed) for i, s in enumerate(corpus)]
    if threads > 1:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(processes=threads) as pool:
            results = pool.map(_build_one, tasks, chunksize=max(1, len(tasks) // (threads * 4)))
    else:
        results = [_build_one(t) for t in tasks]
    results.sort(key=lambda r: r[0])

    entries: list[ManifestEntry] = []
    manifest_path = out_dir / "manifest.jsonl"
    try:
        with open(manifest_path, "w") as fh:
            for (index, clean_png, noisy_png, report), sketch in zip(results, corpus):
                sample_id = f"{index:06d}_{slugify(sketch.category)}"
                clean_rel = f"images/{sample_id}_clean.png"
                noisy_rel = f"images/{sample_id}_noisy.png"
                (out_dir / clean_rel).write_bytes(clean_png)
                (out_dir / noisy_rel).write_bytes(noisy_png)
                empty_prompt = (
                    empty_prompt_fraction > 0.0
                    and float(rng.stream(report["seed"], rng.TAG_PROMPT).uniform()) < empty_prompt_fraction
                )
                entry = ManifestEntry(
                    sample_id=sample_id,
                    category=sketch.category,
                    prompt=make_prompt(sketch.category),
                    clean_path=clean_rel,
                    noisy_path=noisy_rel,
                    seed=report["seed"],
                    augment_report=report,
                    empty_prompt=empty_prompt,
                )
                fh.write(json.dumps(entry.to_dict(), separators=(",", ":")) + "\n")
                entries.append(entry)
    except OSError:
        # Do not leave a half-written manifest behind.
        manifest_path.unlink(missing_ok=True)
        raise

    # threads is deliberately absent: outputs must be byte-identical for any
    # worker count, and the snapshot records only artifact-determining knobs.
    snapshot = {
        "global_seed": global_seed,
        "samples": len(corpus),
        "empty_prompt_fraction": empty_prompt_fraction,
        "render.size": render_spec.size,
        "render.stroke_width": render_spec.stroke_width,
        "render.supersample": render_spec.supersample,
    }
    snapshot.update(extra_snapshot or {})
    lines = [f"{k} = {v}" for k, v in snapshot.items()]
    text = "\n".join(lines) + "\n" + config_to_text(aug_cfg)
    (out_dir / "config_snapshot.txt").write_text(text)
    return entries


def read_manifest(path) -> list[dict]:
    entries = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                entries.append(json.loads(line))
    return entries
