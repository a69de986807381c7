"""Counter-based random streams keyed by (seed, purpose, index...).

Each draw is a pure function of its key, so results do not depend on the
order in which steps, particles or Monte-Carlo batches are processed.  The
key is hashed into a Philox key and the trailing integers land in the
Philox counter, which is what makes resuming at an arbitrary step exact.
"""

from __future__ import annotations

import zlib

import numpy as np

DATA = "data"
PARTICLES = "particles"
LANGEVIN = "mfld"
LABEL_NOISE = "label-noise"
ALIGN_MC = "align-mc"


def _tag(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def generator(seed: int, purpose: str, *index: int) -> np.random.Generator:
    """Independent generator for ``(seed, purpose, *index)``.

    At most two trailing indices are supported; they occupy the two high
    words of the 256-bit Philox counter so consecutive draws within one
    stream (which increment the low word) never collide across indices.
    """
    if len(index) > 2:
        raise ValueError("at most two stream indices are supported")
    key = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, _tag(purpose)]).generate_state(2, np.uint64)
    idx = [int(i) for i in index] + [0] * (2 - len(index))
    if any(i < 0 for i in idx):
        raise ValueError("stream indices must be non-negative")
    counter = np.array([0, 0, idx[0], idx[1]], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))
