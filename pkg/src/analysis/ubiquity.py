"""
Conditioned ubiquity: balls B(z^v, ell^xi) around designated atoms of
words whose Birkhoff ratio is close to a target d.
"""

import logging
import math
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from src.config import Config
from src.dynamics import EnvPath, Potential, Word, birkhoff_table
from src.errors import EmptySelectionError
from src.measures import AtomList, designated_atoms
from src.thermo import MeasureTable
from src.utils import stream_rng

logger = logging.getLogger(__name__)


class UbiquityBall(BaseModel):
    """B(z^v, (ell^v)^xi)."""
    center: float = Field(..., description="Position of the designated atom z^v")
    radius: float
    word: Word
    birkhoff_ratio: float = Field(..., description="S psi-sup / S phi-sup over [v]")
    weight: float = Field(..., description="nu-weight of z^v")
    ell: float = Field(..., description="2 |I^v|")


def default_eps(depth: int) -> float:
    """eps_n = EPS_SCHEDULE_SCALE / sqrt(n)."""
    return Config.EPS_SCHEDULE_SCALE / math.sqrt(depth)


def _eps_for(eps_schedule: Optional[Sequence[float]], depth: int) -> float:
    if eps_schedule is None or len(eps_schedule) == 0:
        return default_eps(depth)
    eps = list(eps_schedule)
    if any(e <= 0 for e in eps):
        raise ValueError("eps_schedule entries must be positive")
    if any(b > a for a, b in zip(eps, eps[1:])):
        raise ValueError("eps_schedule must be non-increasing")
    return float(eps[min(depth, len(eps)) - 1])


def ubiquity_sample(atoms: AtomList, table: MeasureTable, path: EnvPath, d: float, xi: float,
                    eps_schedule: Optional[Sequence[float]] = None, depth: Optional[int] = None,
                    lookahead: Optional[int] = None) -> List[UbiquityBall]:
    """
    Balls around z^v for every depth-n word with |S psi / S phi - d| <= eps_n.

    Args:
        atoms: Atom list built from table
        table: Measure table at the path offset
        path: Environment path
        d: Target Birkhoff ratio (> 0)
        xi: Approximation exponent (>= 1)
        eps_schedule: eps_n indexed by depth - 1; the last entry is reused
            beyond its length (default 4/sqrt(n))
        depth: Word depth n (default table.depth - 1)
        lookahead: Search depth for z^v (default up to Config.MAX_LOOKAHEAD)

    Raises:
        EmptySelectionError: no word has a ratio within eps_n of d
    """
    if xi < 1.0:
        raise ValueError(f"xi must be >= 1, got {xi}")
    if d <= 0.0:
        raise ValueError(f"d must be positive, got {d}")
    if atoms.offset != table.offset or atoms.digest != table.digest:
        raise ValueError("atoms were built from a different measure table")
    depth = depth or table.depth - 1
    if not 1 <= depth < table.depth:
        raise ValueError(f"depth must lie in 1..{table.depth - 1}, got {depth}")
    lookahead = lookahead or min(Config.MAX_LOOKAHEAD, table.depth - depth)
    eps = _eps_for(eps_schedule, depth)

    agg = table.aggregate(depth)
    psi_sup = birkhoff_table(path, table.offset, depth, Potential.PSI)[0]
    phi_sup = birkhoff_table(path, table.offset, depth, Potential.PHI)[0]
    ratio = psi_sup / phi_sup
    selected = np.nonzero(np.abs(ratio - d) <= eps)[0]
    if selected.size == 0:
        raise EmptySelectionError(f"no depth-{depth} word has Birkhoff ratio within {eps:.3g} of d = {d:.6g} "
                                  f"(range [{ratio.min():.4g}, {ratio.max():.4g}])")

    found = designated_atoms(table, path, depth, lookahead)
    balls = []
    for j in selected:
        if found.level[j] == 0:
            logger.debug(f"no designated atom below word {j} within lookahead {lookahead}")
            continue
        ell = 2.0 * float(agg.masses[j])
        balls.append(UbiquityBall(center=float(found.positions[j]), radius=min(ell ** xi, ell),
                                  word=Word(letters=tuple(int(s) for s in agg.words[j]), base_offset=table.offset),
                                  birkhoff_ratio=float(ratio[j]), weight=float(found.weights[j]), ell=ell))
    if not balls:
        raise EmptySelectionError(f"selected words have no designated atom within lookahead {lookahead}")
    logger.info(f"Ubiquity sample d={d:.6g} xi={xi:g} eps={eps:.3g}: {len(balls)} balls at depth {depth}")
    return balls


class UbiquityCheck(BaseModel):
    """log nu(B(x, 2 rho)) / log(2 rho) <= d/xi + tol at points inside the balls."""
    d: float
    xi: float
    bound: float = Field(..., description="d/xi + tol")
    ratios: List[float] = Field(default_factory=list)
    violations: int = 0
    fraction: float = 0.0

    @property
    def passed_fraction(self) -> float:
        return 1.0 - self.fraction


def ubiquity_check(atoms: AtomList, balls: List[UbiquityBall], d: float, xi: float,
                   n_points: int = 100, tol: float = 0.15, seed: int = 0,
                   stream_label: str = "ubiquity") -> UbiquityCheck:
    """
    Draw points uniformly in randomly chosen balls and compare the lower
    mass scaling with d/xi. Each point is measured at twice the ball radius
    and at the smallest radius still reaching the designated atom; the
    smaller ratio is kept.
    """
    if not balls:
        raise ValueError("balls must not be empty")
    rng = stream_rng(seed, stream_label)
    picks = rng.integers(0, len(balls), size=n_points)
    offsets = rng.random(n_points) * 2.0 - 1.0
    ratios = []
    for k, u in zip(picks, offsets):
        ball = balls[int(k)]
        x = float(np.clip(ball.center + u * ball.radius, 0.0, 1.0))
        scales = np.array([2.0 * ball.radius, abs(x - ball.center) + max(1e-6 * ball.radius, 1e-14)])
        masses = atoms.mass_in(x - scales, x + scales)
        point = [math.log(m) / math.log(s) for m, s in zip(masses, scales) if m > 0 and s < 1.0]
        ratios.append(min(point) if point else math.inf)
    bound = d / xi + tol
    violations = int(sum(1 for r in ratios if r > bound))
    return UbiquityCheck(d=d, xi=xi, bound=bound, ratios=ratios, violations=violations,
                         fraction=violations / max(len(ratios), 1))
