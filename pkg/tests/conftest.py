import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from corpusgen import corpus_lines  # noqa: E402

from sketchlab.sketch import load_quickdraw, normalize  # noqa: E402


@pytest.fixture(scope="session")
def corpus_100():
    """100 parsed + normalized synthetic sketches."""
    return [normalize(s) for s in load_quickdraw(corpus_lines(100, seed=1))]


@pytest.fixture(scope="session")
def corpus_lines_100():
    return corpus_lines(100, seed=1)


@pytest.fixture(scope="session")
def corpus_1000():
    return [normalize(s) for s in load_quickdraw(corpus_lines(1000, seed=2))]
