"""
Empirical L^q-spectra of the inverse measure and of the Gibbs measure.

The packing supremum over disjoint r-balls is replaced by the maximum over
a fixed number of shifted grids of cells of length 2r.
"""

import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp
from scipy.stats import linregress

from src.config import Config
from src.dynamics import EnvPath, cylinder_arrays
from src.errors import ScaleBelowFloorError
from src.measures import AtomList
from src.thermo import CurveKind, MeasureTable, SpectrumCurve

logger = logging.getLogger(__name__)


def _check_scales(scales: Sequence[float]) -> np.ndarray:
    r = np.sort(np.asarray(scales, dtype=np.float64))
    if r.size < 2:
        raise ValueError("at least two scales are needed for a scaling slope")
    if r[0] <= 0.0 or r[-1] >= 1.0:
        raise ValueError(f"scales must lie in (0, 1), got [{r[0]:g}, {r[-1]:g}]")
    return r


def _check_grid(q_grid: Sequence[float]) -> np.ndarray:
    q = np.asarray(q_grid, dtype=np.float64)
    if q.size == 0:
        raise ValueError("q_grid must not be empty")
    if np.any(np.diff(q) <= 0):
        raise ValueError("q_grid must be strictly increasing")
    return q


def packing_statistic(positions: np.ndarray, weights: np.ndarray, q: np.ndarray, r: float,
                      offsets: int, spread: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> np.ndarray:
    """
    log max over grid phases of sum over nonempty cells of mass^q.

    Args:
        positions: Sorted point positions in [0, 1]
        weights: Positive masses of the points
        q: Exponents
        r: Radius; cells have length 2r
        offsets: Number of grid phases
        spread: (knots, cumulative mass) of a diffuse part added to every cell of [0, 1]

    Returns:
        One log statistic per q
    """
    width = 2.0 * r
    best = np.full(q.size, -np.inf)
    for j in range(offsets):
        shift = j * width / offsets
        cells = np.floor((positions + shift) / width).astype(np.int64)
        if spread is None:
            _, inverse = np.unique(cells, return_inverse=True)
            masses = np.bincount(inverse, weights=weights)
        else:
            count = int(np.floor((1.0 + shift) / width)) + 1
            masses = np.bincount(cells, weights=weights, minlength=count)
            edges = np.clip(np.arange(masses.size + 1) * width - shift, 0.0, 1.0)
            masses = masses + np.diff(np.interp(edges, *spread))
        masses = masses[masses > 0.0]
        stat = logsumexp(q[:, None] * np.log(masses)[None, :], axis=1)
        best = np.maximum(best, stat)
    return best


def _slopes(log_r: np.ndarray, stats: np.ndarray) -> np.ndarray:
    return np.array([linregress(log_r, stats[:, i]).slope for i in range(stats.shape[1])])


def tail_scales(r: np.ndarray) -> np.ndarray:
    """The finer half [n/2, n] of an ascending scale window, at least two scales."""
    keep = max(2, int(math.ceil((r.size + 1) / 2.0)))
    return r[:keep]


def usable_scales(scales: Sequence[float], floor: float) -> np.ndarray:
    """
    Scales at or above the truncation floor.

    Raises:
        ScaleBelowFloorError: fewer than two scales survive
    """
    r = _check_scales(scales)
    kept = r[r >= floor]
    if kept.size < 2:
        raise ScaleBelowFloorError(f"only {kept.size} of {r.size} scales lie above the truncation "
                                   f"residual {floor:.3e}")
    if kept.size < r.size:
        logger.warning(f"Dropped {r.size - kept.size} scales below the truncation residual {floor:.3e}")
    return kept


def lq_estimate(atoms: AtomList, q_grid: Sequence[float], scales: Sequence[float],
                offsets: Optional[int] = None, clamp: bool = False) -> SpectrumCurve:
    """
    tau-hat(q) = least-squares slope of the log packing statistic against log r
    over the finer half of the scale window.

    The residual of the deepest generation is spread evenly over each I^w,
    so every cell of [0, 1] carries mass.

    Args:
        atoms: Enumerated atoms of nu (boundary atoms included)
        q_grid: Increasing exponents
        scales: Radii in (residual, 1)
        offsets: Grid phases (default Config.LQ_OFFSETS)
        clamp: Drop scales below the residual instead of failing

    Raises:
        ScaleBelowFloorError: a scale lies below the truncation residual
    """
    offsets = offsets or Config.LQ_OFFSETS
    q = _check_grid(q_grid)
    if clamp:
        r = usable_scales(scales, atoms.residual)
    else:
        r = _check_scales(scales)
        if r[0] < atoms.residual:
            raise ScaleBelowFloorError(f"scale {r[0]:.3e} below the truncation residual {atoms.residual:.3e}")
    r = tail_scales(r)
    positions, weights = atoms.point_masses
    spread = atoms.residual_profile
    stats = np.vstack([packing_statistic(positions, weights, q, float(s), offsets, spread) for s in r])
    tau = _slopes(np.log(r), stats)
    logger.info(f"L^q estimate over {r.size} scales [{r[0]:.3g}, {r[-1]:.3g}] with {len(positions)} atoms")
    return SpectrumCurve(kind=CurveKind.TAU_ESTIMATE, grid=q.tolist(), values=tau.tolist(),
                         depth=atoms.gen_depth, scales=r.tolist(), digest=atoms.digest, label="tau_hat")


def forward_lq_estimate(table: MeasureTable, path: EnvPath, q_grid: Sequence[float],
                        scales: Sequence[float], offsets: Optional[int] = None) -> SpectrumCurve:
    """
    L^q-spectrum of mu itself from cylinder masses placed at the cylinder left ends.

    Raises:
        ScaleBelowFloorError: a scale is below the largest cylinder diameter
    """
    offsets = offsets or Config.LQ_OFFSETS
    q = _check_grid(q_grid)
    r = _check_scales(scales)
    words, lo, hi = cylinder_arrays(path, table.offset, table.depth)
    if words.shape != table.words.shape:
        raise ValueError("measure table does not match the cylinders of its path")
    diam = float(np.max(hi - lo))
    if r[0] < diam:
        raise ScaleBelowFloorError(f"scale {r[0]:.3e} below the largest depth-{table.depth} "
                                   f"cylinder diameter {diam:.3e}")
    keep = table.masses > 0.0
    stats = np.vstack([packing_statistic(np.asarray(lo)[keep], table.masses[keep], q, float(s), offsets)
                       for s in r])
    tau = _slopes(np.log(r), stats)
    return SpectrumCurve(kind=CurveKind.TAU_ESTIMATE, grid=q.tolist(), values=tau.tolist(),
                         depth=table.depth, scales=r.tolist(), digest=table.digest, label="tau_hat_forward")


def concavity_defect(curve: SpectrumCurve) -> float:
    """Largest increase of consecutive secant slopes (0 for a concave curve)."""
    slopes = curve.slopes()
    if slopes.size < 2:
        return 0.0
    return float(max(0.0, np.max(np.diff(slopes))))


def deviation_from(curve: SpectrumCurve, reference: SpectrumCurve,
                   restrict: Optional[Tuple[float, float]] = None) -> Tuple[float, float]:
    """
    sup |curve - reference| on the common grid points.

    Returns:
        (largest deviation, q where it occurs)
    """
    ref = dict(zip(reference.grid, reference.values))
    worst, where = 0.0, math.nan
    for x, v in zip(curve.grid, curve.values):
        if x not in ref:
            continue
        if restrict is not None and not restrict[0] <= x <= restrict[1]:
            continue
        gap = abs(v - ref[x])
        if gap > worst or math.isnan(where):
            worst, where = gap, x
    return worst, where
