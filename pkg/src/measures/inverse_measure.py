"""
Inverse measure nu_omega of a random weak Gibbs measure.

nu is the distribution of the generalized inverse of the CDF F of mu. On
an attractor of zero Lebesgue measure it is a pure Dirac sum: one atom of
weight m^{v s~} - M^{v s} at F(M^{v s}) for every gap between neighbouring
pieces, plus boundary atoms m_min at 0 and 1 - M_max at 1.

Positions come from cumulative cylinder masses, weights from geometric
extrema. Atoms of one generation are computed in bulk from the
lexicographic word arrays.
"""

import logging
from functools import cached_property
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.config import Config
from src.dynamics import (
    EnvPath,
    Potential,
    TailExtrema,
    Word,
    birkhoff_bounds,
    check_admissible,
    tail_extrema_for,
    word_array,
)
from src.errors import InvalidModelError, NoAtomFoundError
from src.thermo import MeasureTable, prefix_ids
from src.utils import format_float, format_word, write_csv

logger = logging.getLogger(__name__)


class IntervalRecord(BaseModel):
    """I^v = [F(m^v), F(M^v)); its length is mu([v])."""
    model_config = ConfigDict(frozen=True)

    word: Word
    lo: float
    hi: float

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def ell(self) -> float:
        """Twice the interval length."""
        return 2.0 * self.length


def interval_bounds(table: MeasureTable) -> Tuple[np.ndarray, np.ndarray]:
    """(lo, hi) arrays aligned with the table rows."""
    hi = np.cumsum(table.masses)
    lo = np.concatenate([[0.0], hi[:-1]])
    return lo, hi


def interval_table(table: MeasureTable) -> List[IntervalRecord]:
    """
    Lexicographic cumulative sums of the masses.

    Consecutive records share endpoints, so depth-n records partition [0, 1).
    """
    lo, hi = interval_bounds(table)
    return [IntervalRecord(word=Word(letters=tuple(int(s) for s in w), base_offset=table.offset),
                           lo=float(a), hi=float(b))
            for w, a, b in zip(table.words, lo, hi)]


class SuffixSets(BaseModel):
    """S(omega, v, k) and its neighbour pairs S'(omega, v, k)."""
    word: Word
    k: int
    S: List[Word] = Field(default_factory=list, description="Admissible length-k suffixes of word")
    S_prime: List[Tuple[Word, Word]] = Field(default_factory=list,
                                             description="(w, w~) with U^{v w~} the right neighbour of U^{v w}")


def _suffix_rows(path: EnvPath, word: Word, k: int) -> np.ndarray:
    rows = word_array(path, word.end, k)
    if len(word) == 0:
        return rows
    follow = path.adjacency_at(word.end - 1)[word.letters[-1] - 1]
    return rows[follow[rows[:, 0].astype(np.int64) - 1] > 0]


def suffix_sets(path: EnvPath, word: Word, k: int) -> SuffixSets:
    """
    Admissible suffixes of length k and their right-neighbour pairs.

    Branches preserve orientation, so lexicographic order of the suffixes is
    the left-to-right order of the cylinders and each pair is two consecutive
    suffixes. The rightmost suffix has no neighbour.
    """
    if k < 1:
        raise ValueError(f"suffix length k must be >= 1, got {k}")
    if len(word):
        check_admissible(path, word)
    rows = _suffix_rows(path, word, k)
    suffixes = [Word(letters=tuple(int(s) for s in r), base_offset=word.end) for r in rows]
    pairs = list(zip(suffixes[:-1], suffixes[1:]))
    return SuffixSets(word=word, k=k, S=suffixes, S_prime=pairs)


class Atom(BaseModel):
    """One Dirac mass of nu."""
    parent_word: Word
    branch: int = Field(..., description="s, left piece of the gap")
    sibling: int = Field(..., description="s~, right neighbour of s")
    position: float = Field(..., description="F(M^{v s})")
    weight: float = Field(..., ge=0.0, description="m^{v s~} - M^{v s}")
    position_err: float = Field(0.0, ge=0.0)

    @property
    def zero_weight(self) -> bool:
        return self.weight == 0.0


class SiblingGaps(BaseModel):
    """Gaps between consecutive children of depth-`parent_depth` words, in bulk."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    child_depth: int
    parent_depth: int
    parent: np.ndarray = Field(..., description="Row of the parent word at parent_depth")
    rank: np.ndarray = Field(..., description="Row of the left child v u s at child_depth")
    weights: np.ndarray
    positions: np.ndarray
    errs: np.ndarray


def _clamp_weights(raw: np.ndarray, tol: float, where: str) -> np.ndarray:
    if raw.size and raw.min() < -2.0 * tol:
        logger.error(f"Overlapping attractor pieces {where}: gap {raw.min():.3e}")
        raise InvalidModelError(f"attractor pieces overlap {where} (gap {raw.min():.3e})",
                                failed_checks=["overlap"])
    return np.maximum(raw, 0.0)


def sibling_gaps(table: MeasureTable, tails: TailExtrema, child_depth: int, parent_depth: int,
                 tol: float) -> SiblingGaps:
    """
    Gaps between consecutive depth-child_depth cylinders with a common
    (child_depth - 1)-prefix, tagged with their depth-parent_depth ancestor.
    """
    agg = table.aggregate(child_depth)
    words = agg.words
    m, big, _ = tails.word_extrema(table.offset, words)
    same = prefix_ids(words, child_depth - 1)
    left = np.nonzero(same[1:] == same[:-1])[0]
    weights = _clamp_weights(m[left + 1] - big[left], tol, f"at depth {child_depth}")
    cum = np.cumsum(agg.masses)
    positions = cum[left]
    errs = table.residual * (left + 1.0)
    return SiblingGaps(child_depth=child_depth, parent_depth=parent_depth,
                       parent=prefix_ids(words, parent_depth)[left], rank=left,
                       weights=weights, positions=positions, errs=errs)


class AtomList(BaseModel):
    """
    Atoms of nu up to a generation depth, in generation then cylinder order.

    Generation g holds the atoms (v, s) with |v| = g.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    table: MeasureTable
    gen_depth: int = Field(..., ge=1)
    positions: np.ndarray
    weights: np.ndarray
    errs: np.ndarray
    generation: np.ndarray
    rank: np.ndarray = Field(..., description="Row of v s in the depth-(g+1) aggregate")
    boundary_left: float = Field(..., description="m_min, the atom at 0")
    boundary_right: float = Field(..., description="1 - M_max, the atom at 1")
    residual: float = Field(..., ge=0.0, description="Mass of generations >= gen_depth")
    deep_spans: Optional[np.ndarray] = Field(None, description="Residual mass inside each I^w, |w| = gen_depth")
    extrema_error: float = Field(0.0, description="Largest extrema error used")

    @property
    def offset(self) -> int:
        return self.table.offset

    @property
    def digest(self) -> str:
        return self.table.digest

    def __len__(self) -> int:
        return int(self.positions.size)

    def total_mass(self) -> float:
        """boundary_left + sum of weights + boundary_right + residual."""
        return float(self.boundary_left + self.weights.sum() + self.boundary_right + self.residual)

    def conservation_defect(self) -> float:
        return abs(self.total_mass() - 1.0)

    def atom(self, i: int) -> Atom:
        g = int(self.generation[i])
        words = self.table.aggregate(g + 1).words
        j = int(self.rank[i])
        parent = Word(letters=tuple(int(s) for s in words[j, :g]), base_offset=self.offset)
        return Atom(parent_word=parent, branch=int(words[j, g]), sibling=int(words[j + 1, g]),
                    position=float(self.positions[i]), weight=float(self.weights[i]),
                    position_err=float(self.errs[i]))

    @property
    def atoms(self) -> List[Atom]:
        return [self.atom(i) for i in range(len(self))]

    def zero_weight_count(self) -> int:
        return int(np.sum(self.weights == 0.0))

    @cached_property
    def point_masses(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        Positive-weight atoms with the boundary atoms, sorted by position.

        Returns:
            (positions, weights)
        """
        pos = np.concatenate([[0.0], self.positions, [1.0]])
        wts = np.concatenate([[self.boundary_left], self.weights, [self.boundary_right]])
        keep = wts > 0.0
        pos, wts = pos[keep], wts[keep]
        order = np.argsort(pos, kind="stable")
        pos, wts = pos[order], wts[order]
        pos.setflags(write=False)
        wts.setflags(write=False)
        return pos, wts

    @cached_property
    def cumulative(self) -> np.ndarray:
        """Running sum of point_masses weights, with a leading 0."""
        return np.concatenate([[0.0], np.cumsum(self.point_masses[1])])

    @cached_property
    def residual_profile(self) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """
        Cumulative residual mass with each deep span spread evenly over its I^w.

        Returns:
            (knots, cumulative mass) for np.interp, or None without deep spans
        """
        if self.deep_spans is None or self.residual <= 0.0:
            return None
        _, hi = interval_bounds(self.table.aggregate(self.gen_depth))
        knots = np.concatenate([[0.0], hi])
        mass = np.concatenate([[0.0], np.cumsum(self.deep_spans)])
        return knots, mass

    def residual_in(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Spread residual mass of [lo, hi]."""
        profile = self.residual_profile
        if profile is None:
            return np.zeros(np.broadcast(np.asarray(lo), np.asarray(hi)).shape)
        return np.interp(hi, *profile) - np.interp(lo, *profile)

    def mass_in(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """nu([lo, hi]) from the enumerated atoms."""
        pos, _ = self.point_masses
        left = np.searchsorted(pos, np.asarray(lo, dtype=np.float64), side="left")
        right = np.searchsorted(pos, np.asarray(hi, dtype=np.float64), side="right")
        return self.cumulative[right] - self.cumulative[left]

    def weight_below(self, word: Word) -> float:
        """Enumerated atom weight strictly inside I^v (word at the table offset)."""
        n = len(word)
        agg = self.table.aggregate(n)
        idx = agg.word_index.get(tuple(word.letters))
        if idx is None:
            return 0.0
        inside = 0.0
        for g in range(n, self.gen_depth):
            sel = self.generation == g
            ids = prefix_ids(self.table.aggregate(g + 1).words, n)[self.rank[sel]]
            inside += float(self.weights[sel][ids == idx].sum())
        return inside

    def to_csv(self, path: Union[str, Path]) -> Path:
        comment = (f"gen_depth={self.gen_depth},residual={format_float(self.residual)},"
                   f"boundary_left={format_float(self.boundary_left)},"
                   f"boundary_right={format_float(self.boundary_right)}")

        def rows():
            for g in range(self.gen_depth):
                words = self.table.aggregate(g + 1).words
                for i in np.nonzero(self.generation == g)[0]:
                    j = int(self.rank[i])
                    yield (format_word(words[j, :g], self.offset), int(words[j, g]),
                           float(self.positions[i]), float(self.weights[i]), float(self.errs[i]))

        return write_csv(Path(path), comment, ["word", "s", "position", "weight", "position_err"], rows())


def atoms(table: MeasureTable, path: EnvPath, gen_depth: Optional[int] = None,
          tol: Optional[float] = None) -> AtomList:
    """
    Enumerate the atoms (v, s) with |v| < gen_depth.

    Args:
        table: Measure table at the path offset with depth >= gen_depth
        path: Environment path the table was built on
        gen_depth: Number of generations (default Config.GEN_DEPTH, capped at table depth)
        tol: Extrema tolerance (default Config.EXTREMA_TOL)

    Returns:
        AtomList whose total mass is 1 up to rounding

    Raises:
        HorizonTooShortError: extrema cannot reach tol on this path
    """
    gen_depth = gen_depth or min(Config.GEN_DEPTH, table.depth)
    tol = Config.EXTREMA_TOL if tol is None else tol
    if gen_depth > table.depth:
        raise ValueError(f"gen_depth {gen_depth} exceeds table depth {table.depth}")
    deepest = table.aggregate(gen_depth).words
    tails = tail_extrema_for(path, table.offset, gen_depth, tol, check_words=deepest)
    m_min, m_max, root_err = tails.root_extrema(table.offset)

    chunks = [sibling_gaps(table, tails, g + 1, g, tol) for g in range(gen_depth)]
    positions = np.concatenate([c.positions for c in chunks])
    weights = np.concatenate([c.weights for c in chunks])
    errs = np.concatenate([c.errs for c in chunks])
    generation = np.concatenate([np.full(c.rank.size, i, dtype=np.int64) for i, c in enumerate(chunks)])
    rank = np.concatenate([c.rank for c in chunks]).astype(np.int64)

    m_deep, big_deep, err_deep = tails.word_extrema(table.offset, deepest)
    residual = float(np.sum(big_deep - m_deep))
    result = AtomList(table=table, gen_depth=gen_depth, positions=positions, weights=weights, errs=errs,
                      generation=generation, rank=rank, boundary_left=m_min, boundary_right=1.0 - m_max,
                      residual=residual, deep_spans=np.maximum(big_deep - m_deep, 0.0),
                      extrema_error=max(root_err, float(err_deep.max(initial=0.0))))
    zeros = result.zero_weight_count()
    if zeros:
        logger.warning(f"{zeros} zero-weight atoms (touching attractor pieces) kept in the list")
    logger.info(f"Enumerated {len(result)} atoms over {gen_depth} generations; "
                f"residual {residual:.3e}, conservation defect {result.conservation_defect():.2e}")
    return result


class LetterGap(BaseModel):
    """Largest gap below one first-level letter."""
    letter: int
    gap: float
    word: str = Field("", description="w of the realizing pair")
    neighbour: str = Field("", description="w~ of the realizing pair")
    level: int = Field(0, description="Suffix length of the realizing pair")


class GapScanReport(BaseModel):
    """gap(omega, k_max) = min over letters of the largest gap below it."""
    offset: int
    k_max: int
    gap: float
    per_letter: List[LetterGap] = Field(default_factory=list)


def gap_scan(path: EnvPath, offset: int, k_max: int, tol: Optional[float] = None) -> GapScanReport:
    """
    For each letter v at offset, sup over suffix lengths m <= k_max of the
    gaps m^{v w~} - M^{v w}; the reported gap is the minimum over v.
    """
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    tol = Config.EXTREMA_TOL if tol is None else tol
    tails = tail_extrema_for(path, offset, k_max + 1, tol)
    size = path.alphabet_at(offset)
    best = [LetterGap(letter=v + 1, gap=0.0) for v in range(size)]
    for m in range(1, k_max + 1):
        words = word_array(path, offset, m + 1)
        lo, hi, _ = tails.word_extrema(offset, words)
        letters = words[:, 0]
        left = np.nonzero(letters[1:] == letters[:-1])[0]
        gaps = lo[left + 1] - hi[left]
        for j, g in zip(left, gaps):
            v = int(letters[j]) - 1
            if g > best[v].gap:
                best[v] = LetterGap(letter=v + 1, gap=float(g), word=format_word(words[j, 1:], offset + 1),
                                    neighbour=format_word(words[j + 1, 1:], offset + 1), level=m)
    gap = min(b.gap for b in best)
    logger.info(f"gap(omega, {k_max}) at offset {offset}: {gap:.6g}")
    return GapScanReport(offset=offset, k_max=k_max, gap=gap, per_letter=best)


class DesignatedAtom(BaseModel):
    """z^v: the heaviest atom inside I^v within a lookahead."""
    word: Word
    atom: Atom
    lookahead_used: int = Field(..., description="|u| + 1 for the chosen atom (v u, s)")
    psi_sup: float = Field(..., description="sup Birkhoff sum of psi over [v]")

    @property
    def psi_ratio(self) -> float:
        """log(weight) / S psi-sup; close to 1 when the gap is of size exp(S psi)."""
        return float(np.log(self.atom.weight) / self.psi_sup) if self.psi_sup != 0 else float("nan")


class DesignatedArrays(BaseModel):
    """Bulk z^v for every depth-n word: -1 rank where none was found."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    depth: int
    positions: np.ndarray
    weights: np.ndarray
    errs: np.ndarray
    level: np.ndarray = Field(..., description="Lookahead used, 0 when no atom was found")
    rank: np.ndarray = Field(..., description="Row of the left child at depth + level")


def designated_atoms(table: MeasureTable, path: EnvPath, depth: int, lookahead: int,
                     tol: Optional[float] = None, tails: Optional[TailExtrema] = None) -> DesignatedArrays:
    """
    z^v for all depth-n words at once.

    Candidates are the atoms (v u, s) with |u| < lookahead; the heaviest
    wins and ties go to the smallest position.
    """
    if lookahead < 1:
        raise ValueError(f"lookahead must be >= 1, got {lookahead}")
    if depth + lookahead > table.depth:
        raise ValueError(f"depth {depth} + lookahead {lookahead} exceeds table depth {table.depth}")
    tol = Config.EXTREMA_TOL if tol is None else tol
    if tails is None:
        deepest = table.aggregate(depth + lookahead).words
        tails = tail_extrema_for(path, table.offset, depth + lookahead, tol, check_words=deepest)
    n_words = table.aggregate(depth).words.shape[0] if depth > 0 else 1

    best_w = np.full(n_words, -1.0)
    best_x = np.full(n_words, np.inf)
    best_e = np.zeros(n_words)
    level = np.zeros(n_words, dtype=np.int64)
    rank = np.full(n_words, -1, dtype=np.int64)
    for m in range(1, lookahead + 1):
        gaps = sibling_gaps(table, tails, depth + m, depth, tol)
        if gaps.rank.size == 0:
            continue
        positive = gaps.weights > 0.0
        parent = gaps.parent[positive]
        w, x = gaps.weights[positive], gaps.positions[positive]
        e, r = gaps.errs[positive], gaps.rank[positive]
        order = np.lexsort((x, -w, parent))
        first = order[np.concatenate([[True], parent[order][1:] != parent[order][:-1]])] if order.size else order
        for i in first:
            p = int(parent[i])
            if w[i] > best_w[p] or (w[i] == best_w[p] and x[i] < best_x[p]):
                best_w[p], best_x[p] = w[i], x[i]
                best_e[p] = e[i]
                level[p] = m
                rank[p] = r[i]
    best_w[level == 0] = 0.0
    best_x[level == 0] = np.nan
    return DesignatedArrays(depth=depth, positions=best_x, weights=best_w, errs=best_e, level=level, rank=rank)


def designated_atom(table: MeasureTable, path: EnvPath, word: Word, lookahead: int = 1,
                    tol: Optional[float] = None) -> DesignatedAtom:
    """
    Heaviest atom x^{v w} with |w| <= lookahead inside the open interval I^v.

    Raises:
        NoAtomFoundError: no positive-weight atom within the lookahead
    """
    if word.base_offset != table.offset:
        raise ValueError(f"word starts at {word.base_offset}, table at {table.offset}")
    check_admissible(path, word)
    n = len(word)
    bulk = designated_atoms(table, path, n, lookahead, tol)
    idx = table.aggregate(n).word_index[tuple(word.letters)] if n > 0 else 0
    if bulk.level[idx] == 0:
        raise NoAtomFoundError(f"no positive-weight atom below {word.to_text()} within lookahead {lookahead}")
    m = int(bulk.level[idx])
    child = table.aggregate(n + m).words
    j = int(bulk.rank[idx])
    atom = Atom(parent_word=Word(letters=tuple(int(s) for s in child[j, :n + m - 1]), base_offset=table.offset),
                branch=int(child[j, -1]), sibling=int(child[j + 1, -1]),
                position=float(bulk.positions[idx]), weight=float(bulk.weights[idx]),
                position_err=float(bulk.errs[idx]))
    psi = birkhoff_bounds(path, word, Potential.PSI).sup_sum
    return DesignatedAtom(word=word, atom=atom, lookahead_used=m, psi_sup=psi)
