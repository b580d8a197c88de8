"""
Random subshift of finite type along an environment path.

Words are enumerated lazily (WordCursor) for streaming consumers and as
lexicographically ordered numpy arrays for vectorized aggregation.
"""

import logging
from typing import Iterator, List, Optional

import numpy as np

from src.config import Config
from src.errors import (
    HorizonTooShortError,
    InadmissibleWordError,
    NoConnectorError,
    NotMixingWithinCapError,
    ResourceGuardError,
)
from src.utils import ArrayCache
from .env_models import EnvPath, Word

logger = logging.getLogger(__name__)

_word_cache = ArrayCache(max_entries=48)


def _require_horizon(path: EnvPath, end: int, what: str) -> None:
    if end > path.horizon:
        raise HorizonTooShortError(f"{what} needs positions up to {end} but path horizon is {path.horizon}",
                                   required=end)


def admissibility_defect(path: EnvPath, word: Word) -> Optional[str]:
    """Reason the word is not admissible, or None."""
    _require_horizon(path, word.end, f"word {word.to_text()}")
    for i, s in enumerate(word.letters):
        pos = word.base_offset + i
        size = path.alphabet_at(pos)
        if not 1 <= s <= size:
            return f"symbol {s} at position {pos} outside alphabet 1..{size}"
        if i > 0 and path.adjacency_at(pos - 1)[word.letters[i - 1] - 1, s - 1] == 0:
            return f"transition {word.letters[i - 1]}->{s} at position {pos - 1} not admissible"
    return None


def is_admissible(path: EnvPath, word: Word) -> bool:
    """
    Whether the word lies in Sigma_{omega} at its base offset.

    Out-of-range symbols give False with a debug diagnostic.
    """
    defect = admissibility_defect(path, word)
    if defect is not None:
        logger.debug(f"Word {word.to_text()} inadmissible: {defect}")
        return False
    return True


def check_admissible(path: EnvPath, word: Word) -> None:
    """Raise InadmissibleWordError for words outside the subshift."""
    defect = admissibility_defect(path, word)
    if defect is not None:
        raise InadmissibleWordError(f"word {word.to_text()}: {defect}")


def count_words(path: EnvPath, offset: int, n: int) -> int:
    """Number of admissible words: 1^T A(offset) ... A(offset+n-2) 1."""
    if n < 1:
        raise ValueError(f"word length must be >= 1, got {n}")
    _require_horizon(path, offset + n, f"length-{n} words at offset {offset}")
    vec = np.ones(path.alphabet_at(offset + n - 1), dtype=object)
    for pos in range(offset + n - 2, offset - 1, -1):
        vec = path.adjacency_at(pos).astype(object) @ vec
    return int(np.sum(vec))


def check_memory_guard(n_words: int, n: int, what: str) -> None:
    """Refuse enumerations whose accumulation count exceeds the guard."""
    cap = Config.get_memory_guard()
    load = int(n_words) * max(int(n), 1)
    if load > cap:
        raise ResourceGuardError(what, required=load, cap=cap)


def _build_word_array(path: EnvPath, offset: int, n: int) -> np.ndarray:
    words = np.arange(1, path.alphabet_at(offset) + 1, dtype=np.int16)[:, None]
    for i in range(1, n):
        adj = path.adjacency_at(offset + i - 1)
        counts = adj.sum(axis=1).astype(np.int64)
        allowed = np.zeros((adj.shape[0], int(counts.max())), dtype=np.int16)
        for a in range(adj.shape[0]):
            nz = np.nonzero(adj[a])[0] + 1
            allowed[a, :nz.size] = nz
        last = words[:, -1].astype(np.int64) - 1
        reps = counts[last]
        starts = np.repeat(np.cumsum(reps) - reps, reps)
        slot = np.arange(int(reps.sum())) - starts
        expanded = np.repeat(words, reps, axis=0)
        nxt = allowed[np.repeat(last, reps), slot]
        words = np.hstack([expanded, nxt[:, None]])
    words.setflags(write=False)
    return words


def word_array(path: EnvPath, offset: int, n: int) -> np.ndarray:
    """
    All admissible words of length n at offset, lexicographic, shape (W, n).

    Symbols are 1-based. Arrays are cached per environment segment and
    returned read-only.
    """
    if n < 1:
        raise ValueError(f"word length must be >= 1, got {n}")
    _require_horizon(path, offset + n, f"length-{n} words at offset {offset}")
    check_memory_guard(count_words(path, offset, n), n, f"enumerating length-{n} words")
    key = ("words",) + path.segment_key(offset, n)
    return _word_cache.get_or_compute(key, lambda: _build_word_array(path, offset, n))


def first_letter_starts(words: np.ndarray) -> np.ndarray:
    """Row indices where the first letter changes (lexicographic blocks)."""
    if words.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    change = np.nonzero(np.diff(words[:, 0]))[0] + 1
    return np.concatenate([[0], change]).astype(np.int64)


class WordCursor:
    """
    Depth-first lexicographic enumeration of Sigma_{omega,n} at an offset.

    Single consumer; each admissible word is yielded exactly once.
    """

    def __init__(self, path: EnvPath, offset: int, n: int):
        if n < 1:
            raise ValueError(f"word length must be >= 1, got {n}")
        _require_horizon(path, offset + n, f"length-{n} words at offset {offset}")
        self.path = path
        self.offset = offset
        self.n = n
        self._walk = self._dfs()

    def __iter__(self) -> Iterator[Word]:
        return self

    def __next__(self) -> Word:
        return next(self._walk)

    @property
    def total(self) -> int:
        return count_words(self.path, self.offset, self.n)

    def _dfs(self) -> Iterator[Word]:
        stack = [iter(range(1, self.path.alphabet_at(self.offset) + 1))]
        prefix: List[int] = []
        while stack:
            depth = len(stack) - 1
            letter = next(stack[-1], None)
            if letter is None:
                stack.pop()
                continue
            del prefix[depth:]
            prefix.append(letter)
            if len(prefix) == self.n:
                yield Word(letters=tuple(prefix), base_offset=self.offset)
            else:
                row = self.path.adjacency_at(self.offset + depth)[letter - 1]
                stack.append(iter((np.nonzero(row)[0] + 1).tolist()))


def enumerate_words(path: EnvPath, offset: int, n: int) -> WordCursor:
    """Lazy cursor over admissible words of length n at offset."""
    return WordCursor(path, offset, n)


def mixing_time(path: EnvPath, offset: int, cap: Optional[int] = None) -> int:
    """
    Smallest p <= cap with A(offset) ... A(offset+p-1) entrywise positive.

    Raises:
        NotMixingWithinCapError: no such p up to cap
        HorizonTooShortError: the path ends before the cap is reached
    """
    cap = Config.MIXING_CAP if cap is None else cap
    if cap < 1:
        raise ValueError(f"cap must be >= 1, got {cap}")
    product = None
    for p in range(1, cap + 1):
        _require_horizon(path, offset + p, f"mixing check of length {p}")
        adj = path.adjacency_at(offset + p - 1).astype(np.int64)
        product = adj if product is None else np.minimum(product @ adj, 1)
        if np.all(product > 0):
            return p
    raise NotMixingWithinCapError(f"no positive admissibility product within {cap} steps at offset {offset}")


def bridge(path: EnvPath, w: Word, w_next: Word, p: int) -> Word:
    """
    Join w and w_next with the lexicographically smallest connector of length p.

    The connector depends only on the last letter of w, the first letter
    of w_next, the junction offsets and p.

    Returns:
        Word w * w_next = w v w_next starting at w.base_offset
    """
    if len(w) == 0 or len(w_next) == 0:
        raise ValueError("bridge needs non-empty words on both sides")
    if p < 1:
        raise ValueError(f"connector length must be >= 1, got {p}")
    if w_next.base_offset != w.end + p:
        raise ValueError(
            f"w_next starts at {w_next.base_offset}, expected {w.end + p} (= end of w + connector length)")
    check_admissible(path, w)
    check_admissible(path, w_next)

    first = w.end
    target = w_next.base_offset
    reachable = {target: np.zeros(path.alphabet_at(target), dtype=bool)}
    reachable[target][w_next.letters[0] - 1] = True
    for pos in range(target - 1, first - 1, -1):
        adj = path.adjacency_at(pos).astype(bool)
        reachable[pos] = np.any(adj & reachable[pos + 1][None, :], axis=1)

    connector = []
    prev = w.letters[-1]
    for pos in range(first, target):
        row = path.adjacency_at(pos - 1)[prev - 1].astype(bool) & reachable[pos]
        candidates = np.nonzero(row)[0]
        if candidates.size == 0:
            raise NoConnectorError(f"no admissible connector of length {p} from {prev} at position {pos - 1}")
        prev = int(candidates[0]) + 1
        connector.append(prev)
    if path.adjacency_at(target - 1)[prev - 1, w_next.letters[0] - 1] == 0:
        raise NoConnectorError(f"no admissible connector of length {p} into {w_next.letters[0]}")
    return Word(letters=w.letters + tuple(connector) + w_next.letters, base_offset=w.base_offset)
