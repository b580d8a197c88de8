"""
Shared helpers: deterministic reductions, seed streams, exports, caches.
"""

from .reduction import (
    derive_stream_seed,
    stream_rng,
    tree_logaddexp,
    block_bounds,
    block_logsumexp,
)
from .export import format_float, format_word, parse_word, write_csv, write_json
from .cache import ArrayCache

__all__ = [
    'derive_stream_seed',
    'stream_rng',
    'tree_logaddexp',
    'block_bounds',
    'block_logsumexp',
    'format_float',
    'format_word',
    'parse_word',
    'write_csv',
    'write_json',
    'ArrayCache',
]
