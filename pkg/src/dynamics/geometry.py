"""
Interval cocycle: cylinder intervals, attractor extrema and projection.

Inverse branches are evaluated endpoint by endpoint from the innermost
letter outward; Moebius maps are never composed as coefficient matrices.
"""

import logging
import math
from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.config import Config
from src.errors import HorizonTooShortError, NumericalGuardError
from src.utils import ArrayCache
from .env_models import EnvModel, EnvPath, Word
from .subshift import check_admissible, word_array

logger = logging.getLogger(__name__)

_cylinder_cache = ArrayCache(max_entries=48)


class CylinderInterval(BaseModel):
    """U_omega^v = [lo, hi]."""
    model_config = ConfigDict(frozen=True)

    word: Word
    lo: float
    hi: float

    @property
    def diam(self) -> float:
        return self.hi - self.lo


class ExtremaPair(BaseModel):
    """min and max of the attractor piece X_omega^v."""
    m: float = Field(..., description="min X^v")
    M: float = Field(..., description="max X^v")
    certified_error: float = Field(..., ge=0.0)
    depth: int = Field(..., description="Deepest cylinder used")


class ProjectedPoint(BaseModel):
    """pi_omega(v) with its error bound."""
    value: float
    error: float


def max_contraction(model: EnvModel) -> float:
    """Largest inverse-branch derivative over all states and symbols."""
    return float(max(math.exp(br.psi_sup) for st in model.states for br in st.branches))


def _guard(diam, word_text: str) -> None:
    if np.min(diam) < Config.DEPTH_GUARD:
        raise NumericalGuardError(f"cylinder diameter below {Config.DEPTH_GUARD:g} for {word_text}")


def _inverse(params: Dict[str, np.ndarray], idx: np.ndarray, z: np.ndarray) -> np.ndarray:
    a = params["a"][idx]
    b = params["b"][idx]
    c = params["c"][idx]
    return a + (b - a) * (z / (1.0 + c - c * z))


def _interval(path: EnvPath, letters, offset: int) -> Tuple[float, float]:
    lo, hi = 0.0, 1.0
    for i in range(len(letters) - 1, -1, -1):
        br = path.state_at(offset + i).branches[letters[i] - 1]
        lo, hi = br.inverse(lo), br.inverse(hi)
    return lo, hi


def cylinder_interval(path: EnvPath, word: Word) -> CylinderInterval:
    """
    Image of [0,1] under g^{v0} o g^{v1} o ... o g^{v(n-1)}.

    Raises:
        InadmissibleWordError: word outside the subshift
        NumericalGuardError: diameter below the depth guard
    """
    if len(word) == 0:
        return CylinderInterval(word=word, lo=0.0, hi=1.0)
    check_admissible(path, word)
    lo, hi = _interval(path, word.letters, word.base_offset)
    _guard(hi - lo, word.to_text())
    return CylinderInterval(word=word, lo=lo, hi=hi)


def apply_branches(path: EnvPath, offset: int, words: np.ndarray, z: np.ndarray,
                   upto: Optional[int] = None) -> np.ndarray:
    """
    Push z through the inverse branches of words[:, :upto], innermost first.

    Args:
        path: Environment path
        offset: Position of words[:, 0]
        words: (W, n) symbol array
        z: (W,) starting points in [0,1]
        upto: Number of leading letters to apply (default all)

    Returns:
        (W,) image points
    """
    upto = words.shape[1] if upto is None else upto
    z = np.asarray(z, dtype=np.float64)
    arrays = path.model.branch_arrays
    for i in range(upto - 1, -1, -1):
        params = arrays[path.states[offset + i]]
        z = _inverse(params, words[:, i].astype(np.int64) - 1, z)
    return z


def _build_cylinder_arrays(path: EnvPath, offset: int, n: int):
    words = word_array(path, offset, n)
    ones = np.ones(words.shape[0])
    lo = apply_branches(path, offset, words, np.zeros(words.shape[0]))
    hi = apply_branches(path, offset, words, ones)
    _guard(hi - lo, f"depth-{n} cylinders at offset {offset}")
    lo.setflags(write=False)
    hi.setflags(write=False)
    return words, lo, hi


def cylinder_arrays(path: EnvPath, offset: int, n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    All depth-n cylinders at offset as arrays (words, lo, hi), lexicographic.

    Cached per environment segment.
    """
    key = ("cylinders",) + path.segment_key(offset, n)
    return _cylinder_cache.get_or_compute(key, lambda: _build_cylinder_arrays(path, offset, n))


def _required_depth(path: EnvPath, diam: float, tol: float) -> int:
    rho = max_contraction(path.model)
    if rho >= 1.0 or diam <= 0:
        return Config.EXTREMA_MAX_DEPTH
    return max(1, int(math.ceil(math.log(tol / diam) / math.log(rho))))


def _follow(path: EnvPath, word: Word, tol: float, rightmost: bool) -> Tuple[float, float, int]:
    letters = list(word.letters)
    offset = word.base_offset
    while True:
        lo, hi = _interval(path, letters, offset)
        if hi - lo < tol:
            return lo, hi, len(letters)
        pos = offset + len(letters)
        if pos + 1 > path.horizon or len(letters) >= Config.EXTREMA_MAX_DEPTH:
            extra = _required_depth(path, hi - lo, tol)
            raise HorizonTooShortError(
                f"extrema of {word.to_text()} need {extra} more levels at tolerance {tol:g}",
                required=pos + extra + 1)
        if not letters:
            choices = np.arange(1, path.alphabet_at(pos) + 1)
        else:
            choices = np.nonzero(path.adjacency_at(pos - 1)[letters[-1] - 1])[0] + 1
        letters.append(int(choices[-1] if rightmost else choices[0]))


def attractor_extrema(path: EnvPath, word: Word, tol: Optional[float] = None) -> ExtremaPair:
    """
    m = min X^v and M = max X^v by leftmost/rightmost continuation.

    Args:
        path: Environment path
        word: Admissible word (may be empty)
        tol: Target diameter of the final cylinders

    Returns:
        ExtremaPair with certified_error below tol

    Raises:
        HorizonTooShortError: the path ends before the cylinders shrink below tol
    """
    tol = Config.EXTREMA_TOL if tol is None else tol
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if len(word) > 0:
        check_admissible(path, word)
    m_lo, m_hi, depth_left = _follow(path, word, tol, rightmost=False)
    big_lo, big_hi, depth_right = _follow(path, word, tol, rightmost=True)
    return ExtremaPair(m=m_lo, M=big_hi, certified_error=max(m_hi - m_lo, big_hi - big_lo),
                       depth=max(depth_left, depth_right))


def project(path: EnvPath, word: Word) -> ProjectedPoint:
    """
    pi_omega(v) approximated by the left end of U^v.

    The error bound is diam(U^v); callers pass words deep enough for their tolerance.
    """
    cyl = cylinder_interval(path, word)
    return ProjectedPoint(value=cyl.lo, error=cyl.diam)


class TailExtrema:
    """
    Leftmost and rightmost continuations to a common end position.

    For every position k in [start, end) and symbol b at k, stores the
    cylinder of b followed by its leftmost (rightmost) admissible
    continuation up to end. Word extrema computed from these tables
    telescope exactly: m^{v s_min} and m^v are the same floating-point number.
    """

    def __init__(self, path: EnvPath, start: int, end: int):
        if end > path.horizon:
            raise HorizonTooShortError(f"extrema tails up to {end}", required=end)
        self.path = path
        self.start = start
        self.end = end
        self.left_lo: Dict[int, np.ndarray] = {}
        self.left_hi: Dict[int, np.ndarray] = {}
        self.right_lo: Dict[int, np.ndarray] = {}
        self.right_hi: Dict[int, np.ndarray] = {}
        arrays = path.model.branch_arrays
        for k in range(end - 1, start - 1, -1):
            params = arrays[path.states[k]]
            size = path.alphabet_at(k)
            idx = np.arange(size)
            if k == end - 1:
                zeros, ones = np.zeros(size), np.ones(size)
                zl_lo, zl_hi, zr_lo, zr_hi = zeros, ones, zeros, ones
            else:
                adj = path.adjacency_at(k)
                leftmost = np.argmax(adj, axis=1)
                rightmost = adj.shape[1] - 1 - np.argmax(adj[:, ::-1], axis=1)
                zl_lo = self.left_lo[k + 1][leftmost]
                zl_hi = self.left_hi[k + 1][leftmost]
                zr_lo = self.right_lo[k + 1][rightmost]
                zr_hi = self.right_hi[k + 1][rightmost]
            self.left_lo[k] = _inverse(params, idx, zl_lo)
            self.left_hi[k] = _inverse(params, idx, zl_hi)
            self.right_lo[k] = _inverse(params, idx, zr_lo)
            self.right_hi[k] = _inverse(params, idx, zr_hi)

    def root_extrema(self, offset: int) -> Tuple[float, float, float]:
        """(m_min, M_max, error) of the whole attractor X_{sigma^offset omega}."""
        m = float(self.left_lo[offset][0])
        big = float(self.right_hi[offset][-1])
        err = max(float(self.left_hi[offset][0] - self.left_lo[offset][0]),
                  float(self.right_hi[offset][-1] - self.right_lo[offset][-1]))
        return m, big, err

    def word_extrema(self, offset: int, words: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Extrema of X^v for every row v of ``words`` at offset.

        Returns:
            (m, M, err) arrays
        """
        n = words.shape[1]
        pos = offset + n - 1
        if pos >= self.end or pos < self.start:
            raise ValueError(f"words of length {n} at {offset} end outside the tail table")
        last = words[:, -1].astype(np.int64) - 1
        stacked = np.concatenate([
            self.left_lo[pos][last], self.left_hi[pos][last],
            self.right_lo[pos][last], self.right_hi[pos][last],
        ])
        tiled = np.tile(words, (4, 1))
        out = apply_branches(self.path, offset, tiled, stacked, upto=n - 1)
        w = words.shape[0]
        m_lo, m_hi, big_lo, big_hi = out[:w], out[w:2 * w], out[2 * w:3 * w], out[3 * w:]
        err = np.maximum(m_hi - m_lo, big_hi - big_lo)
        return m_lo, big_hi, err


def default_tail_end(path: EnvPath, position: int, tol: float) -> int:
    """End position whose tails are expected to shrink below tol."""
    extra = _required_depth(path, 1.0, tol) + 2
    return min(path.horizon, position + extra)


def tail_extrema_for(path: EnvPath, offset: int, depth: int, tol: Optional[float] = None,
                     check_words: Optional[np.ndarray] = None) -> TailExtrema:
    """
    Tail table for words up to ``depth`` at offset, extended until errors fit tol.

    Args:
        path: Environment path
        offset: Start position
        depth: Longest word length that will be queried
        tol: Error tolerance (default Config.EXTREMA_TOL)
        check_words: Optional word array checked against tol after construction

    Raises:
        HorizonTooShortError: the path cannot deliver tol
    """
    tol = Config.EXTREMA_TOL if tol is None else tol
    end = default_tail_end(path, offset + depth, tol)
    while True:
        tails = TailExtrema(path, offset, end)
        err = tails.root_extrema(offset)[2]
        if check_words is not None and check_words.shape[0]:
            err = max(err, float(np.max(tails.word_extrema(offset, check_words)[2])))
        if err <= tol:
            return tails
        if end >= path.horizon:
            extra = _required_depth(path, max(err, tol), tol)
            raise HorizonTooShortError(f"extrema at tolerance {tol:g} (error {err:.3g})",
                                       required=end + extra)
        end = min(path.horizon, end + 8)
