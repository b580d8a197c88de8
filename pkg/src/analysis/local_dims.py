"""
Local dimensions of nu, the exponents alpha^v and the approximation degrees.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy.stats import linregress

from src.config import Config
from src.dynamics import EnvPath, Potential, Word, birkhoff_bounds
from src.measures import AtomList, interval_bounds
from src.thermo import MeasureTable, prefix_ids
from src.utils import stream_rng

logger = logging.getLogger(__name__)


class LocalDimSample(BaseModel):
    """log nu(B(x, r)) / log r scaling at one point."""
    x: float
    scales: List[float]
    masses: List[float]
    slope: float = Field(..., description="Regression slope over all scales with positive mass")
    lower: float = Field(..., description="Smallest windowed secant slope")
    upper: float = Field(..., description="Largest windowed secant slope")
    ratio_lower: float = Field(float("nan"), description="Smallest log nu(B(x, r)) / log r over the scales")
    ratio_upper: float = Field(float("nan"), description="Largest log nu(B(x, r)) / log r over the scales")
    valid: bool = Field(True, description="At least two scales carry positive mass")


def _windowed(log_r: np.ndarray, log_m: np.ndarray, window: int) -> np.ndarray:
    step = min(window, log_r.size - 1)
    return (log_m[step:] - log_m[:-step]) / (log_r[step:] - log_r[:-step])


def local_dims(atoms: AtomList, xs: Sequence[float], scales: Sequence[float],
               window: Optional[int] = None) -> List[LocalDimSample]:
    """
    nu(B(x, r)) by atom summation, then regression, windowed slopes and the
    extremes of log nu(B(x, r)) / log r.

    Secants see the flat mass profile of an atom; the ratios are the finite
    scale liminf and limsup of the local dimension at a non-atom.

    Args:
        atoms: Enumerated atoms
        xs: Points in [0, 1]
        scales: Radii
        window: Secant window in scale steps (default Config.LOCAL_DIM_WINDOW)
    """
    window = window or Config.LOCAL_DIM_WINDOW
    r = np.sort(np.asarray(scales, dtype=np.float64))
    if r.size < 2:
        raise ValueError("at least two scales are needed")
    samples = []
    for x in xs:
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"point {x} outside [0, 1]")
        masses = atoms.mass_in(x - r, x + r)
        positive = masses > 0.0
        if positive.sum() < 2:
            samples.append(LocalDimSample(x=float(x), scales=r.tolist(), masses=masses.tolist(),
                                          slope=float("nan"), lower=float("nan"), upper=float("nan"),
                                          valid=False))
            continue
        log_r, log_m = np.log(r[positive]), np.log(masses[positive])
        secants = _windowed(log_r, log_m, window)
        ratios = log_m / log_r
        samples.append(LocalDimSample(x=float(x), scales=r.tolist(), masses=masses.tolist(),
                                      slope=float(linregress(log_r, log_m).slope),
                                      lower=float(secants.min()), upper=float(secants.max()),
                                      ratio_lower=float(ratios.min()), ratio_upper=float(ratios.max())))
    return samples


class AlphaEstimate(BaseModel):
    """alpha^v = S psi-sup / log|I^v| with the Birkhoff-ratio surrogate."""
    word: Word
    alpha: float
    surrogate: float = Field(..., description="S psi-sup / S phi-sup")
    gap: float = Field(..., description="|alpha - surrogate|")


def alpha_of(table: MeasureTable, path: EnvPath, word: Word) -> AlphaEstimate:
    """
    Raises:
        ValueError: the interval of word is empty
    """
    length = table.mass_of(word)
    if length <= 0.0:
        raise ValueError(f"|I^v| = {length} for {word.to_text()}")
    if length >= 1.0:
        raise ValueError(f"I^v is the whole interval for {word.to_text()}")
    psi = birkhoff_bounds(path, word, Potential.PSI).sup_sum
    phi = birkhoff_bounds(path, word, Potential.PHI).sup_sum
    alpha = psi / float(np.log(length))
    surrogate = psi / phi if phi != 0.0 else float("nan")
    return AlphaEstimate(word=word, alpha=alpha, surrogate=surrogate, gap=abs(alpha - surrogate))


def cell_of(table: MeasureTable, x: float, n: int) -> int:
    """Row of the depth-n word v with x in I^v."""
    agg = table.aggregate(n)
    _, hi = interval_bounds(agg)
    return int(min(np.searchsorted(hi, x, side="right"), hi.size - 1))


def alpha_at(table: MeasureTable, path: EnvPath, x: float, n: int) -> AlphaEstimate:
    """alpha^{x|n} for the depth-n word whose interval holds x."""
    agg = table.aggregate(n)
    row = agg.words[cell_of(table, x, n)]
    return alpha_of(table, path, Word(letters=tuple(int(s) for s in row), base_offset=table.offset))


class ApproxDegree(BaseModel):
    """Finite-depth approximation degrees of a point."""
    x: float
    depths: List[int]
    xi_seq: List[float] = Field(default_factory=list)
    xi_hat_seq: List[float] = Field(default_factory=list)
    xi: Optional[float] = Field(None, description="max of xi over the tail window")
    xi_hat: Optional[float] = Field(None, description="min of xi_hat over the tail window")
    collision: bool = Field(False, description="x lies on an enumerated atom")


def _collides(atoms: AtomList, x: float) -> bool:
    if len(atoms) == 0:
        return False
    dist = np.abs(atoms.positions - x)
    return bool(np.any(dist <= np.maximum(atoms.errs, 1e-15)))


def _bracket(near: np.ndarray, x: float) -> Tuple[float, float]:
    """Neighbours of x among the sorted atom positions, with 0 and 1 as walls."""
    i = int(np.searchsorted(near, x))
    lo = float(near[i - 1]) if i > 0 else 0.0
    hi = float(near[i]) if i < near.size else 1.0
    return lo, hi


def approx_degree(atoms: AtomList, x: float, depths: Sequence[int]) -> ApproxDegree:
    """
    xi(n) = sup over s of log|x - x^{x|n s}| / log ell^{x|n} and
    xi_hat(n) = log(2 * distance to the atoms of generation <= n) / log(gap),
    where gap is the spacing of the two such atoms that bracket x.

    The bracketing gap is a child cell of I^{x|n}, so its log length agrees
    with log|I^{x|n}| to first order; measuring the distance against the
    half gap puts the finite-depth ratio at exactly 1 for a point midway
    between its neighbours. The limsup and liminf are read off the tail
    window [n/2, n] of the depths.
    """
    depths = sorted(int(n) for n in depths)
    if not depths:
        raise ValueError("depths must not be empty")
    if depths[0] < 1 or depths[-1] >= atoms.gen_depth:
        raise ValueError(f"depths must lie in 1..{atoms.gen_depth - 1}")
    if _collides(atoms, x):
        logger.debug(f"x = {x!r} collides with an enumerated atom")
        return ApproxDegree(x=x, depths=depths, collision=True)

    table = atoms.table
    xi_seq, xi_hat_seq = [], []
    for n in depths:
        agg = table.aggregate(n)
        row = cell_of(table, x, n)
        length = float(agg.masses[row])
        children = atoms.table.aggregate(n + 1).words
        sel = atoms.generation == n
        parents = prefix_ids(children, n)[atoms.rank[sel]]
        own = atoms.positions[sel][parents == row]
        if own.size:
            xi_seq.append(float(np.max(np.log(np.abs(x - own))) / np.log(2.0 * length)))
        else:
            xi_seq.append(float("nan"))
        near = np.sort(atoms.positions[atoms.generation <= n])
        lo, hi = _bracket(near, x)
        gap = hi - lo
        dist = min(x - lo, hi - x)
        if gap >= 1.0 or dist <= 0.0:
            xi_hat_seq.append(float("nan"))
        else:
            xi_hat_seq.append(float(np.log(2.0 * dist) / np.log(gap)))

    tail = [i for i, n in enumerate(depths) if n >= depths[-1] / 2.0]
    xi_tail = [xi_seq[i] for i in tail if np.isfinite(xi_seq[i])]
    xi_hat_tail = [xi_hat_seq[i] for i in tail if np.isfinite(xi_hat_seq[i])]
    return ApproxDegree(x=x, depths=depths, xi_seq=xi_seq, xi_hat_seq=xi_hat_seq,
                        xi=max(xi_tail) if xi_tail else None,
                        xi_hat=min(xi_hat_tail) if xi_hat_tail else None)


def sample_points(atoms: AtomList, count: int, seed: int, stream_label: str = "samples") -> np.ndarray:
    """
    mu-typical CDF images: uniform points of [0, 1) that miss every atom.

    F maps mu to Lebesgue measure when mu has no atoms, so uniform draws
    are the images of mu-typical points.
    """
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    rng = stream_rng(seed, stream_label)
    points: List[float] = []
    while len(points) < count:
        for x in rng.random(count):
            if not _collides(atoms, float(x)):
                points.append(float(x))
            if len(points) == count:
                break
    return np.asarray(points)
