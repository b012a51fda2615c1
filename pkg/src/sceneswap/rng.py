"""Counter-based seed splitting.

Every random draw in a pipeline run comes from a generator derived from the
single run seed plus a path of labels (stage, frame, step), so any stage can
be re-run in isolation and reproduce its noise exactly.
"""

from __future__ import annotations

import zlib

import numpy as np


def derive_rng(seed: int, *path: int | str) -> np.random.Generator:
    words = [int(seed) & 0xFFFFFFFF]
    for part in path:
        if isinstance(part, str):
            words.append(zlib.crc32(part.encode("utf-8")))
        else:
            words.append(int(part) & 0xFFFFFFFF)
    return np.random.default_rng(np.random.SeedSequence(words))
