"""Per-sample, per-stage random streams.

Every stage of every sample draws from its own PCG64 generator seeded by
``SeedSequence(entropy=seed mod 2**64, spawn_key=(key_hash, stage))`` where
``key_hash`` is the first 8 bytes (little endian) of the BLAKE2b digest of
``"{case_id}/{day}/{slice_index}"``. PCG64 and SeedSequence are specified
bit-for-bit by numpy, so streams do not depend on platform, process count or
the order in which samples are visited.
"""

from __future__ import annotations

import enum
import hashlib

import numpy as np

from ..core import SliceKey


class Stage(enum.IntEnum):
    FLIP = 1
    ROTATE = 2
    ELASTIC = 3
    DROPOUT = 4
    JITTER = 5


def key_hash(key: SliceKey) -> int:
    text = f"{key.case_id}/{key.day}/{key.slice_index}".encode("utf-8")
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "little")


def stage_rng(seed: int, key: SliceKey, stage: Stage) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed % 2**64, spawn_key=(key_hash(key), int(stage)))
    return np.random.Generator(np.random.PCG64(ss))
