import subprocess
import sys
from pathlib import Path

import pytest

# the primary package's synthetic corpus generator doubles as ours
sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "tests"))

from corpusgen import corpus_lines  # noqa: E402


def build_dataset(out_dir: Path, n: int, seed: int, corpus_seed: int, size: int = 64,
                  categories=("circle", "square")) -> Path:
    """Build a small clean/noisy dataset through the primary CLI."""
    corpus = out_dir / "corpus.ndjson"
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus.write_text("\n".join(corpus_lines(n, seed=corpus_seed, categories=categories)) + "\n")
    ds = out_dir / "ds"
    proc = subprocess.run(
        ["sketchlab", "gen-dataset", "--in", str(corpus), "--out", str(ds),
         "--seed", str(seed), "--size", str(size), "--stroke-width", "2"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return ds


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """16-pair two-category dataset for fast unit tests."""
    return build_dataset(tmp_path_factory.mktemp("tiny"), n=16, seed=5, corpus_seed=80)
