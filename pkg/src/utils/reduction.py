"""
Deterministic reductions and seed streams.

Every sum that feeds a CSV output goes through a fixed block partition and
a pairwise tree, so worker count never changes a single bit of the result.
"""

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from src.config import Config

logger = logging.getLogger(__name__)


def derive_stream_seed(seed: int, stream_label: str) -> int:
    """
    Derive an independent 64-bit seed for a named random stream.

    The first 8 bytes of SHA-256 over ``"<seed>:<label>"`` read little endian.

    Args:
        seed: Model seed (64-bit unsigned)
        stream_label: Name of the stream, e.g. "path" or "samples"

    Returns:
        Integer seed suitable for numpy.random.default_rng
    """
    digest = hashlib.sha256(f"{int(seed)}:{stream_label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def stream_rng(seed: int, stream_label: str) -> np.random.Generator:
    """Random generator for a named stream."""
    return np.random.default_rng(derive_stream_seed(seed, stream_label))


def tree_logaddexp(partials: Sequence[float]) -> float:
    """
    Combine log-space partial sums with a fixed pairwise tree.

    Args:
        partials: Log-space values in a fixed order

    Returns:
        log(sum(exp(partials)))
    """
    level = np.asarray(partials, dtype=np.float64)
    if level.size == 0:
        return float("-inf")
    while level.size > 1:
        if level.size % 2:
            level = np.append(level, -np.inf)
        level = np.logaddexp(level[0::2], level[1::2])
    return float(level[0])


def block_bounds(n_values: int, group_starts: Optional[Sequence[int]] = None,
                 block_size: Optional[int] = None) -> list[tuple[int, int]]:
    """
    Split ``range(n_values)`` into reduction blocks.

    Blocks never straddle a group start (first-letter blocks of a
    lexicographic word array) and hold at most ``block_size`` entries.
    """
    block_size = block_size or Config.REDUCTION_BLOCK
    starts = sorted(set(int(s) for s in (group_starts if group_starts is not None else [0])) | {0})
    starts = [s for s in starts if s < n_values]
    edges = starts + [n_values]
    bounds = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        for b in range(lo, hi, block_size):
            bounds.append((b, min(b + block_size, hi)))
    return bounds


def block_logsumexp(values: np.ndarray, group_starts: Optional[Sequence[int]] = None,
                    threads: Optional[int] = None) -> float:
    """
    Log-sum-exp of a 1-D array with a thread-count independent result.

    Args:
        values: Log-space terms in lexicographic order
        group_starts: Indices where a new first-letter block begins
        threads: Worker count (defaults to Config.get_threads())

    Returns:
        log(sum(exp(values)))
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return float("-inf")
    bounds = block_bounds(values.size, group_starts)
    threads = threads or Config.get_threads()

    def _partial(bound: tuple[int, int]) -> float:
        lo, hi = bound
        return float(logsumexp(values[lo:hi]))

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(_partial, bounds))
    else:
        partials = [_partial(b) for b in bounds]
    return tree_logaddexp(partials)
