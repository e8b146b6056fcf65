"""Seeded, splittable random streams.

Every replica of every experiment draws from its own stream keyed by
``(seed, stream_id)``; the stream id of replica ``r`` of experiment ``e`` is
``stream_id_for(e, r)``.  Because the mapping is fixed, results never depend on
how replicas are distributed over workers.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int

    def __post_init__(self):
        if not (0 <= self.seed <= MASK64) or not (0 <= self.stream_id <= MASK64):
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))


def stream_id_for(experiment: str, replica: int) -> int:
    """Stable 64-bit stream id for replica ``replica`` of ``experiment``."""
    h = hashlib.blake2b(f"{experiment}\x00{int(replica)}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little")


def stream_for(seed: int, experiment: str, replica: int) -> RngStream:
    return RngStream(int(seed) & MASK64, stream_id_for(experiment, replica))


def random_bits(gen: np.random.Generator, n: int) -> np.ndarray:
    """``n`` fair bits as uint8 0/1, taken little-endian from raw stream bytes."""
    if n == 0:
        return np.zeros(0, dtype=np.uint8)
    raw = np.frombuffer(gen.bytes((n + 7) // 8), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n]
