"""
Box-counting dimension of the attractor from depth-n cylinder covers.
"""

import logging
from typing import List, Sequence

import numpy as np
from pydantic import BaseModel
from scipy.stats import linregress

from src.dynamics import EnvPath, cylinder_arrays

logger = logging.getLogger(__name__)


class BoxCount(BaseModel):
    scales: List[float]
    counts: List[int]
    estimate: float


def cell_count(lo: np.ndarray, hi: np.ndarray, r: float) -> int:
    """Number of cells [j r, (j+1) r) meeting the union of sorted intervals [lo, hi]."""
    first = np.floor(lo / r).astype(np.int64)
    last = np.floor(hi / r).astype(np.int64)
    covered = np.concatenate([[first[0] - 1], np.maximum.accumulate(last)[:-1]])
    return int(np.sum(np.maximum(0, last - np.maximum(first - 1, covered))))


def box_counts(path: EnvPath, depth: int, scales: Sequence[float], offset: int = 0) -> BoxCount:
    """N(r) for every scale and the slope of log N against log(1/r)."""
    r = np.sort(np.asarray(scales, dtype=np.float64))
    if r.size < 2:
        raise ValueError("at least two scales are needed")
    _, lo, hi = cylinder_arrays(path, offset, depth)
    diam = float(np.max(hi - lo))
    if diam >= r[0]:
        raise ValueError(f"depth {depth} cylinders (diameter {diam:.3e}) are not finer than scale {r[0]:.3e}")
    counts = [cell_count(lo, hi, float(s)) for s in r]
    estimate = float(-linregress(np.log(r), np.log(counts)).slope)
    logger.info(f"Box dimension at depth {depth}: {estimate:.6g} from {r.size} scales")
    return BoxCount(scales=r.tolist(), counts=counts, estimate=estimate)


def box_dimension(path: EnvPath, depth: int, scales: Sequence[float], offset: int = 0) -> float:
    """Box-counting slope of the depth-n cylinder union."""
    return box_counts(path, depth, scales, offset).estimate
