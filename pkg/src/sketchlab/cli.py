"""Batch command-line surface. Every artifact-producing run writes a config
snapshot next to its outputs and is byte-reproducible from its --seed.

Exit codes: 0 success, 2 usage, 3 I/O, 4 config, 5 data.
Environment overrides: SKETCHLAB_SEED and SKETCHLAB_THREADS apply when the
corresponding flag is omitted.
"""

from __future__ import annotations

import argparse
import json
import multiprocessing
import os
import sys
from pathlib import Path

from . import __version__
from .augment import AugmentConfig, apply, config_from_mapping, config_to_text, parse_config_text
from .dataset import build_pairs, holdout_kmeans, load_category_stats, slugify
from .errors import ConfigError, EmptyForegroundError, SketchLabError
from .metrics import (
    MetricsConfig,
    chaos_bins,
    evaluate_pair,
    read_report_csv,
    read_score_sidecar,
    write_report_csv,
)
from .raster import RenderSpec, load_png, render, save_png
from .sketch import CanvasSpec, load_quickdraw, normalize, serialize_quickdraw
from .tracking import PenHeuristic, parse_landmarks, to_sketch

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_CONFIG = 4
EXIT_DATA = 5

_CATEGORY_EXIT = {"config": EXIT_CONFIG, "io": EXIT_IO, "data": EXIT_DATA}


def _env_int(name: str, default: int | None) -> int | None:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from exc


def _read_lines(path: Path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return fh.readlines()


def _load_config_mapping(path: str | None) -> dict[str, str]:
    if path is None:
        return {}
    return parse_config_text(Path(path).read_text())


def _render_spec(mapping: dict[str, str], args) -> RenderSpec:
    size = int(mapping.get("render.size", 512))
    width = float(mapping.get("render.stroke_width", 3))
    ss = int(mapping.get("render.supersample", 2))
    if getattr(args, "size", None) is not None:
        size = args.size
    if getattr(args, "stroke_width", None) is not None:
        width = args.stroke_width
    if getattr(args, "supersample", None) is not None:
        ss = args.supersample
    return RenderSpec(size=size, stroke_width=width, supersample=ss)


def _snapshot(path: Path, command: str, args_items: dict, aug_cfg: AugmentConfig | None = None) -> None:
    lines = [f"command = {command}", f"version = {__version__}"]
    lines += [f"{k} = {v}" for k, v in args_items.items()]
    text = "\n".join(lines) + "\n"
    if aug_cfg is not None:
        text += config_to_text(aug_cfg)
    path.write_text(text)


def _strip_suffix(stem: str) -> str:
    for suffix in ("_clean", "_noisy", "_gen"):
        if stem.endswith(suffix):
            return stem[: -len(suffix)]
    return stem


def _index_images(directory: Path, prefer: str) -> dict[str, Path]:
    """Map sample_id -> png path; `prefer` breaks ties when one id has several files."""
    out: dict[str, Path] = {}
    for path in sorted(directory.glob("*.png")):
        sid = _strip_suffix(path.stem)
        if sid in out:
            if path.stem.endswith(prefer) and not out[sid].stem.endswith(prefer):
                out[sid] = path
        else:
            out[sid] = path
    return out


# ---------------------------------------------------------------------------
# Command implementations


def _cmd_qd_import(args) -> int:
    canvas = CanvasSpec(margin=args.margin)
    out_lines = []
    for sketch in load_quickdraw(_read_lines(Path(args.infile))):
        out_lines.append(serialize_quickdraw(normalize(sketch, canvas)))
    Path(args.out).write_text("\n".join(out_lines) + "\n")
    _snapshot(
        Path(str(args.out) + ".config.txt"),
        "qd-import",
        {"in": args.infile, "out": args.out, "margin": args.margin},
    )
    return EXIT_OK


def _cmd_augment(args) -> int:
    mapping = _load_config_mapping(args.config)
    cfg = config_from_mapping(mapping)
    cfg.validate()
    canvas = CanvasSpec(margin=args.margin)
    out_lines = []
    reports = []
    from . import rng as _rng

    for i, sketch in enumerate(load_quickdraw(_read_lines(Path(args.infile)))):
        seed = _rng.sample_seed(args.seed, i)
        noisy, report = apply(normalize(sketch, canvas), cfg, seed)
        out_lines.append(serialize_quickdraw(noisy))
        reports.append(json.dumps({"index": i, **report.to_dict()}, separators=(",", ":")))
    Path(args.out).write_text("\n".join(out_lines) + "\n")
    report_path = Path(args.report) if args.report else Path(str(args.out) + ".reports.jsonl")
    report_path.write_text("\n".join(reports) + "\n")
    _snapshot(
        Path(str(args.out) + ".config.txt"),
        "augment",
        {"in": args.infile, "out": args.out, "seed": args.seed, "margin": args.margin},
        cfg,
    )
    return EXIT_OK


def _cmd_render(args) -> int:
    mapping = _load_config_mapping(args.config)
    spec = _render_spec(mapping, args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    count = 0
    for i, sketch in enumerate(load_quickdraw(_read_lines(Path(args.infile)))):
        save_png(render(sketch, spec), out_dir / f"{i:06d}_{slugify(sketch.category)}.png")
        count += 1
    _snapshot(
        out_dir / "config_snapshot.txt",
        "render",
        {
            "in": args.infile,
            "out": args.out,
            "count": count,
            "render.size": spec.size,
            "render.stroke_width": spec.stroke_width,
            "render.supersample": spec.supersample,
        },
    )
    return EXIT_OK


def _cmd_gen_dataset(args) -> int:
    mapping = _load_config_mapping(args.config)
    cfg = config_from_mapping(mapping)
    cfg.validate()
    spec = _render_spec(mapping, args)
    canvas = CanvasSpec(margin=args.margin)
    empty_fraction = float(mapping.get("dataset.empty_prompt_fraction", 0.0))
    corpus = [normalize(s, canvas) for s in load_quickdraw(_read_lines(Path(args.infile)))]
    entries = build_pairs(
        corpus,
        cfg,
        spec,
        args.out,
        global_seed=args.seed,
        threads=args.threads,
        empty_prompt_fraction=empty_fraction,
        extra_snapshot={"command": "gen-dataset", "in": args.infile, "margin": args.margin},
    )
    print(f"wrote {len(entries)} pairs to {args.out}")
    return EXIT_OK


def _eval_one(task):
    sid, gt_path, cand_path, cfg, ingested = task
    try:
        return evaluate_pair(
            load_png(gt_path), load_png(cand_path), cfg, sample_id=sid, ingested=ingested
        )
    except EmptyForegroundError as exc:
        # blank generation: handled explicitly in the summary, not a crash
        return (sid, str(exc))


def _cmd_eval(args) -> int:
    cfg = MetricsConfig()
    gt_index = _index_images(Path(args.gt), prefer="_clean")
    cand_index = _index_images(Path(args.cand), prefer="_noisy")
    scores = read_score_sidecar(args.scores) if args.scores else {}
    matched = sorted(set(gt_index) & set(cand_index))
    tasks = [
        (sid, gt_index[sid], cand_index[sid], cfg, scores.get(sid)) for sid in matched
    ]
    if args.threads > 1:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(processes=args.threads) as pool:
            results = pool.map(_eval_one, tasks)
    else:
        results = [_eval_one(t) for t in tasks]
    reports = [r for r in results if not isinstance(r, tuple)]
    skipped = [r for r in results if isinstance(r, tuple)]
    for sid, reason in skipped:
        print(f"sketchlab: skipped {sid}: {reason}", file=sys.stderr)
    reports.sort(key=lambda r: r.sample_id)
    write_report_csv(args.out, reports)
    _snapshot(
        Path(str(args.out) + ".config.txt"),
        "eval",
        {"gt": args.gt, "cand": args.cand, "out": args.out, "matched": len(matched),
         "scores": args.scores or "", "threads": args.threads},
    )
    print(f"evaluated {len(reports)} matched pairs")
    return EXIT_OK


def _cmd_bins(args) -> int:
    gen_rows = {r["sample_id"]: r for r in read_report_csv(args.report)}
    track_rows = {r["sample_id"]: r for r in read_report_csv(args.tracking_report)}
    matched = sorted(set(gen_rows) & set(track_rows))
    records = [
        (float(track_rows[sid]["cd"]), float(gen_rows[sid]["cd"])) for sid in matched
    ]
    summary = chaos_bins(records, n_bins=args.bins, mode=args.mode)
    payload = json.dumps(summary.to_dict(), indent=2)
    if args.out:
        Path(args.out).write_text(payload + "\n")
        _snapshot(
            Path(str(args.out) + ".config.txt"),
            "bins",
            {"report": args.report, "tracking_report": args.tracking_report,
             "bins": args.bins, "mode": args.mode, "records": len(records)},
        )
    else:
        print(payload)
    return EXIT_OK


def _cmd_holdout(args) -> int:
    stats = load_category_stats(args.stats)
    split = holdout_kmeans(stats, k=args.k, seed=args.seed)
    payload = json.dumps({**split.to_dict(), "k": args.k, "seed": args.seed}, indent=2)
    Path(args.out).write_text(payload + "\n")
    _snapshot(
        Path(str(args.out) + ".config.txt"),
        "holdout",
        {"stats": args.stats, "out": args.out, "k": args.k, "seed": args.seed},
    )
    return EXIT_OK


def _cmd_track_import(args) -> int:
    rec = parse_landmarks(_read_lines(Path(args.infile)))
    sketch = to_sketch(
        rec,
        PenHeuristic(extension_ratio_threshold=args.threshold),
        CanvasSpec(margin=args.margin),
        category=args.category,
    )
    Path(args.out).write_text(serialize_quickdraw(sketch) + "\n")
    _snapshot(
        Path(str(args.out) + ".config.txt"),
        "track-import",
        {"in": args.infile, "out": args.out, "category": args.category,
         "threshold": args.threshold, "margin": args.margin, "frames": len(rec.frames)},
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sketchlab",
        description="Sketch corruption pairs, tracking ingest, and faithfulness metrics.",
        epilog="Environment: SKETCHLAB_SEED, SKETCHLAB_THREADS override flag defaults.",
    )
    parser.add_argument("--version", action="version", version=f"sketchlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_seed(p):
        p.add_argument("--seed", type=int, default=_env_int("SKETCHLAB_SEED", 0),
                       help="global random seed (default 0)")

    def add_threads(p):
        p.add_argument("--threads", type=int, default=_env_int("SKETCHLAB_THREADS", 1),
                       help="worker process count; output is identical for any value")

    def add_margin(p):
        p.add_argument("--margin", type=float, default=0.05, help="canvas margin (default 0.05)")

    def add_render_flags(p):
        p.add_argument("--size", type=int, default=None, help="image side in pixels (default 512)")
        p.add_argument("--stroke-width", type=float, default=None, help="stroke width in pixels (default 3)")
        p.add_argument("--supersample", type=int, default=None, help="supersampling factor (default 2)")

    p = sub.add_parser("qd-import", help="parse + normalize an NDJSON corpus")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    add_margin(p)
    p.set_defaults(func=_cmd_qd_import)

    p = sub.add_parser("augment", help="corrupt a corpus into tracking-like sketches")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None, help="key = value config file")
    p.add_argument("--report", default=None, help="augmentation reports JSONL path")
    add_seed(p)
    add_margin(p)
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("render", help="rasterize an NDJSON corpus to PNGs")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    add_render_flags(p)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("gen-dataset", help="build clean/noisy training pairs with a manifest")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    add_seed(p)
    add_threads(p)
    add_margin(p)
    add_render_flags(p)
    p.set_defaults(func=_cmd_gen_dataset)

    p = sub.add_parser("eval", help="score candidate images against ground truth")
    p.add_argument("--gt", required=True, help="directory of ground-truth PNGs")
    p.add_argument("--cand", required=True, help="directory of candidate PNGs")
    p.add_argument("--out", required=True, help="report CSV path")
    p.add_argument("--scores", default=None, help="neural-score sidecar JSONL")
    add_threads(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("bins", help="chaos-level bin analysis from two report CSVs")
    p.add_argument("--report", required=True, help="generated-vs-gt report CSV")
    p.add_argument("--tracking-report", required=True, help="tracking-vs-gt report CSV")
    p.add_argument("--out", default=None, help="summary JSON path (default: stdout)")
    p.add_argument("--bins", type=int, default=4)
    p.add_argument("--mode", choices=("width", "count"), default="width")
    p.set_defaults(func=_cmd_bins)

    p = sub.add_parser("holdout", help="K-means holdout split over category stats")
    p.add_argument("--stats", required=True, help="category stats JSONL")
    p.add_argument("--out", required=True, help="split JSON path")
    p.add_argument("--k", type=int, default=10)
    add_seed(p)
    p.set_defaults(func=_cmd_holdout)

    p = sub.add_parser("track-import", help="landmark JSONL to a tracking sketch NDJSON")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--category", default="tracking")
    p.add_argument("--threshold", type=float, default=1.3,
                   help="index extension ratio for pen-down (default 1.3)")
    add_margin(p)
    p.set_defaults(func=_cmd_track_import)

    return parser


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except SketchLabError as exc:
        print(f"sketchlab: error category={exc.category}: {exc}", file=sys.stderr)
        return _CATEGORY_EXIT.get(exc.category, EXIT_DATA)
    except FileNotFoundError as exc:
        print(f"sketchlab: error category=io: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"sketchlab: error category=io: {exc}", file=sys.stderr)
        return EXIT_IO


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
