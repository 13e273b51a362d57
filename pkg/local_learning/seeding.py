"""Named random streams derived from one seed."""

import zlib

import numpy as np


class RandomStreams:
    """Independent generators for model init, data, shuffling and so on.

    The same (seed, name, extra) always yields the same stream, whatever
    other streams were drawn before it.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)

    def generator(self, name: str, *extra: int) -> np.random.Generator:
        key = [self.seed, zlib.crc32(name.encode("utf-8")), *[int(e) for e in extra]]
        return np.random.default_rng(np.random.SeedSequence(key))
