"""Reproducible random streams and the block-parallel driver.

Every draw index ``i`` belongs to block ``i // BLOCK_SIZE``; each block owns
an independent PCG64 stream derived from ``(seed, purpose, block)`` through
:class:`numpy.random.SeedSequence`.  Blocks are evaluated in any order by any
number of threads and merged in block order, so results never depend on the
worker count.
"""
from __future__ import annotations

import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, TypeVar

import numpy as np

from .errors import ConfigurationError

__all__ = ["RandomStream", "BLOCK_SIZE", "purpose_key", "block_ranges", "run_blocks", "default_threads"]

BLOCK_SIZE = 4096
T = TypeVar("T")


def purpose_key(*parts: str | int | float) -> tuple[int, ...]:
    """Stable integer key for a textual purpose (CRC32 of each part)."""
    return tuple(zlib.crc32(repr(p).encode()) for p in parts)


@dataclass(frozen=True)
class RandomStream:
    """A pure function of ``(seed, stream_index)``.

    Parameters
    ----------
    seed : int
        Unsigned 64-bit seed.
    stream_index : int
        Nonnegative index; distinct indices give independent streams.
    key : tuple of int
        Optional purpose prefix so that different estimators or identity
        sides never share a stream.
    """

    seed: int
    stream_index: int = 0
    key: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        if int(self.stream_index) < 0:
            raise ConfigurationError("stream index must be nonnegative")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=tuple(self.key) + (int(self.stream_index),))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, *parts: str | int | float) -> "RandomStream":
        """A stream with an extended purpose key (same index)."""
        return RandomStream(self.seed, self.stream_index, tuple(self.key) + purpose_key(*parts))


def block_ranges(n: int, block_size: int = BLOCK_SIZE) -> list[tuple[int, int, int]]:
    """``(block_index, start, stop)`` triples covering ``range(n)``."""
    return [(b, s, min(s + block_size, n)) for b, s in enumerate(range(0, n, block_size))]


def default_threads() -> int:
    env = os.environ.get("TAILCLUSTER_THREADS")
    if env:
        try:
            t = int(env)
        except ValueError:
            raise ConfigurationError(f"TAILCLUSTER_THREADS={env!r} is not an integer") from None
        if t < 1:
            raise ConfigurationError("TAILCLUSTER_THREADS must be >= 1")
        return t
    return 1


def run_blocks(
    fn: Callable[[int, int, np.random.Generator], T],
    n: int,
    stream: RandomStream,
    threads: int = 1,
    block_size: int = BLOCK_SIZE,
) -> list[T]:
    """Evaluate ``fn(block_index, count, rng)`` for every block.

    Results come back in block order whatever ``threads`` is.
    """
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    if threads < 1:
        raise ConfigurationError("threads must be >= 1")
    blocks = block_ranges(n, block_size)

    def work(blk: tuple[int, int, int]) -> T:
        b, s, e = blk
        rng = RandomStream(stream.seed, b, stream.key).generator()
        return fn(b, e - s, rng)

    if threads == 1 or len(blocks) == 1:
        return [work(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(work, blocks))

