"""CLI: sidecar scoring and the desk-scale conditional denoiser.

Exit codes: 0 success, 2 usage, 3 I/O, 4 config, 5 data, 6 scorer unavailable.
The toy-eval command invokes the primary `sketchlab eval` CLI for Chamfer
scores, keeping this package on the interface side of the boundary.
"""

from __future__ import annotations

import argparse
import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from . import __version__
from .data import PairDataset, from_model_space, load_image, to_model_space
from .errors import ConfigError, DataError, NeuralError, NotTrainedError, ScorerUnavailable
from .model import ToyDenoiser, load_checkpoint, save_checkpoint
from .sample import generate_batch
from .schedule import DiffusionSchedule
from .scoring import ClipItem, LpipsItem, merge_records, score_clip, score_lpips
from .sidecar import write_sidecar
from .train import train_loop

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_CONFIG = 4
EXIT_DATA = 5
EXIT_UNAVAILABLE = 6


def _cmd_score(args) -> int:
    torch.manual_seed(args.seed)
    ds = PairDataset(args.dataset)
    groups = []
    if args.clip:
        items = []
        for e in ds.entries:
            clean = load_image(ds.root / e["clean_path"])
            noisy = load_image(ds.root / e["noisy_path"])
            items.append(
                ClipItem(sample_id=e["sample_id"], image=clean, ref_image=noisy, text=e["prompt"])
            )
        groups.append(score_clip(items))
    if args.lpips:
        items = [
            LpipsItem(
                sample_id=e["sample_id"],
                image_a=load_image(ds.root / e["clean_path"]),
                image_b=load_image(ds.root / e["noisy_path"]),
            )
            for e in ds.entries
        ]
        groups.append(score_lpips(items))
    if not groups:
        raise ConfigError("nothing to score: enable --clip and/or --lpips")
    write_sidecar(args.out, merge_records(*groups))
    print(f"wrote {len(ds.entries)} sidecar records to {args.out}")
    return EXIT_OK


def _cmd_toy_train(args) -> int:
    ds = PairDataset(args.dataset)
    schedule = DiffusionSchedule.linear(T=args.timesteps)
    torch.manual_seed(args.seed)
    torch.set_num_threads(args.torch_threads)
    model = ToyDenoiser(base=args.base)
    losses = train_loop(
        ds, model, schedule,
        steps=args.steps, batch_size=args.batch, lr=args.lr, seed=args.seed,
        log_every=args.log_every,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(
        model,
        {"T": args.timesteps, "beta_start": 1e-4, "beta_end": 0.02},
        out,
    )
    with open(out.with_suffix(".losses.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "loss"])
        for i, v in enumerate(losses):
            writer.writerow([i, repr(v)])
    early = float(np.mean(losses[100:200])) if len(losses) >= 200 else float("nan")
    trailing = float(np.mean(losses[-100:]))
    print(f"trained {args.steps} steps; early(100-200) {early:.4f} trailing(100) {trailing:.4f}")
    return EXIT_OK


def _cmd_toy_eval(args) -> int:
    model, sched_cfg = load_checkpoint(args.model)
    schedule = DiffusionSchedule.linear(
        T=sched_cfg["T"], beta_start=sched_cfg["beta_start"], beta_end=sched_cfg["beta_end"]
    )
    torch.set_num_threads(args.torch_threads)
    ds = PairDataset(args.dataset)
    n = min(args.n, len(ds))
    out = Path(args.out)
    for sub in ("gt", "cond", "uncond"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    for start in range(0, n, args.batch):
        chunk = range(start, min(start + args.batch, n))
        conds, prompts, ids, cleans = [], [], [], []
        for i in chunk:
            clean, noisy, prompt = ds.item(i)
            ids.append(ds.entries[i]["sample_id"])
            cleans.append(clean)
            conds.append(to_model_space(noisy))
            prompts.append(prompt)
        cond_batch = torch.stack(conds)
        blank = torch.ones_like(cond_batch)  # all-white condition = unconditioned
        gen_cond = generate_batch(cond_batch, prompts, model, schedule, seed=args.seed + start)
        gen_uncond = generate_batch(blank, prompts, model, schedule, seed=args.seed + start)
        for k, sid in enumerate(ids):
            Image.fromarray(cleans[k], "L").save(out / "gt" / f"{sid}.png")
            Image.fromarray(from_model_space(gen_cond[k]), "L").save(out / "cond" / f"{sid}.png")
            Image.fromarray(from_model_space(gen_uncond[k]), "L").save(out / "uncond" / f"{sid}.png")

    def run_eval(cand_dir, csv_path):
        proc = subprocess.run(
            ["sketchlab", "eval", "--gt", str(out / "gt"), "--cand", str(cand_dir),
             "--out", str(csv_path)],
            capture_output=True, text=True,
        )
        if proc.returncode != 0:
            raise NeuralError(f"sketchlab eval failed: {proc.stderr.strip()}")
        with open(csv_path, newline="") as fh:
            return {row["sample_id"]: float(row["cd"]) for row in csv.DictReader(fh)}

    cd_cond = run_eval(out / "cond", out / "cond_report.csv")
    cd_uncond = run_eval(out / "uncond", out / "uncond_report.csv")

    wins = ties = losses_n = 0
    for i in range(n):
        sid = ds.entries[i]["sample_id"]
        in_c, in_u = sid in cd_cond, sid in cd_uncond
        if in_c and in_u:
            if cd_cond[sid] < cd_uncond[sid]:
                wins += 1
            elif cd_cond[sid] == cd_uncond[sid]:
                ties += 1
            else:
                losses_n += 1
        elif in_c and not in_u:
            wins += 1  # unconditioned produced a blank image
        else:
            losses_n += 1
    result = {
        "n": n,
        "conditioned_wins": wins,
        "ties": ties,
        "losses": losses_n,
        "win_fraction": wins / n,
        "mean_cd_conditioned": float(np.mean(list(cd_cond.values()))) if cd_cond else None,
        "mean_cd_unconditioned": float(np.mean(list(cd_uncond.values()))) if cd_uncond else None,
    }
    (out / "result.json").write_text(json.dumps(result, indent=2) + "\n")
    print(json.dumps(result))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sketch-neural",
        description="Neural sidecar scoring and a toy conditional denoiser for sketch datasets.",
    )
    parser.add_argument("--version", action="version", version=f"sketch-neural {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="emit a CLIP/LPIPS sidecar for a dataset")
    p.add_argument("--dataset", required=True, help="dataset dir with manifest.jsonl")
    p.add_argument("--out", required=True, help="sidecar JSONL path")
    p.add_argument("--clip", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--lpips", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--seed", type=int, default=0,
                   help="seed for stochastic scorer backends (bundled backends are deterministic)")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("toy-train", help="train the toy conditional denoiser on a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="checkpoint path (.pt)")
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--timesteps", type=int, default=250, help="schedule length T")
    p.add_argument("--lr", type=float, default=2e-4)
    p.add_argument("--base", type=int, default=32, help="UNet base channel count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log-every", type=int, default=100)
    p.add_argument("--torch-threads", type=int, default=2)
    p.set_defaults(func=_cmd_toy_train)

    p = sub.add_parser("toy-eval", help="conditioned vs unconditioned generation on held-out pairs")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True, help="held-out dataset dir")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--batch", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--torch-threads", type=int, default=2)
    p.set_defaults(func=_cmd_toy_eval)

    return parser


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ScorerUnavailable as exc:
        print(f"sketch-neural: status=unavailable: {exc}", file=sys.stderr)
        return EXIT_UNAVAILABLE
    except (ConfigError, NotTrainedError) as exc:
        print(f"sketch-neural: error category=config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"sketch-neural: error category=data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NeuralError as exc:
        print(f"sketch-neural: error category=data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"sketch-neural: error category=io: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"sketch-neural: error category=io: {exc}", file=sys.stderr)
        return EXIT_IO


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
