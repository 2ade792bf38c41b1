# src/parallel.py
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar, Union

import numpy as np
from dotenv import load_dotenv

load_dotenv()
logger = logging.getLogger(__name__)

T = TypeVar("T")

DEFAULT_THREADS = int(os.getenv("STEIN_PAIRS_THREADS", "1"))
DEFAULT_CHUNK = 5_000

Seed = Union[int, np.random.SeedSequence, np.random.Generator]


def spawn_streams(seed: Seed, count: int) -> List[np.random.Generator]:
    """Independent substreams of one seed; stable for a fixed (seed, count)."""
    if isinstance(seed, np.random.Generator):
        return seed.spawn(count)
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in root.spawn(count)]


def root_seed(seed: Seed) -> Optional[int]:
    """The integer a stream was ultimately seeded from; substreams report their root's seed."""
    if isinstance(seed, np.random.Generator):
        seed = getattr(seed.bit_generator, "seed_seq", None)
    if isinstance(seed, np.random.SeedSequence):
        seed = seed.entropy
    return int(seed) if isinstance(seed, (int, np.integer)) else None


def split_counts(total: int, parts: int) -> List[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def chunked(total: int, chunk: int = DEFAULT_CHUNK) -> List[int]:
    sizes = [chunk] * (total // chunk)
    if total % chunk:
        sizes.append(total % chunk)
    return sizes


def run_partitioned(
    work: Callable[[np.random.Generator, int], T],
    total: int,
    seed: Seed,
    threads: Optional[int] = None,
) -> List[T]:
    """Runs ``work(rng, count)`` on ``threads`` substreams and returns results in partition order."""
    threads = threads or DEFAULT_THREADS
    threads = max(1, min(threads, total))
    streams = spawn_streams(seed, threads)
    counts = split_counts(total, threads)
    logger.debug(f"Partitioning {total} samples over {threads} workers: {counts}")
    if threads == 1:
        return [work(streams[0], counts[0])]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(work, rng, count) for rng, count in zip(streams, counts)]
        return [f.result() for f in futures]


def pooled_mean_se(partials: Sequence[tuple]) -> tuple:
    """Combines (sum, sum_sq, count) partials in order into (mean, standard error)."""
    total = sum(p[2] for p in partials)
    s = sum(p[0] for p in partials)
    s2 = sum(p[1] for p in partials)
    mean = s / total
    var = max(s2 / total - np.abs(mean) ** 2, 0.0) * total / max(total - 1, 1)
    return mean, float(np.sqrt(var / total))
