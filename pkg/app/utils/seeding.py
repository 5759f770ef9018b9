"""
Named seed derivation.

All randomness in a run flows from one master seed; each component asks for
its own stream by name (and optional index), so components can be varied
independently without disturbing each other's draws.
"""

import zlib
from typing import Union

import numpy as np

SeedKey = Union[str, int]


def _key(part: SeedKey) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    return int(part)


def seed_sequence(master: int, *path: SeedKey) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(master), spawn_key=tuple(_key(p) for p in path))


def derive_seed(master: int, *path: SeedKey) -> int:
    """Stable non-negative 63-bit seed for the stream named by `path`."""
    state = seed_sequence(master, *path).generate_state(1, dtype=np.uint64)[0]
    return int(state >> np.uint64(1))


def make_rng(master: int, *path: SeedKey) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(master, *path))
