"""Named random streams derived from one seed.

Each consumer asks for its own stream by name, so adding a consumer never
shifts the numbers another consumer sees.
"""

import zlib

import numpy as np


def stream(seed: int, name: str) -> np.random.Generator:
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(key,)))
