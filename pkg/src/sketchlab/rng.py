"""Counter-based seed splitting so parallel generation order cannot change outputs."""

from __future__ import annotations

import numpy as np

# Fixed stream tags; changing these changes every derived stream.
TAG_FIRE = 1
TAG_WAVE = 2
TAG_SPIKE = 3
TAG_JITTER = 4
TAG_SKETCH_DISTORT = 5
TAG_MISPLACE = 6
TAG_RESIZE = 7
TAG_FALSE_STROKES = 8
TAG_ERASE = 9
TAG_PROMPT = 10

SUB_TAGS = {
    "wave": TAG_WAVE,
    "spike": TAG_SPIKE,
    "jitter": TAG_JITTER,
    "sketch_distort": TAG_SKETCH_DISTORT,
    "misplace": TAG_MISPLACE,
    "resize": TAG_RESIZE,
    "false_strokes": TAG_FALSE_STROKES,
    "erase": TAG_ERASE,
}


def sample_seed(global_seed: int, index: int) -> int:
    """Derive the per-sample seed for corpus position `index`."""
    ss = np.random.SeedSequence((global_seed, index))
    return int(ss.generate_state(1, np.uint64)[0])


def stream(seed: int, *tags: int) -> np.random.Generator:
    """A generator keyed on (seed, tags); independent of any other tag tuple."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, *tags))))
