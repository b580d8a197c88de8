"""
Spectrum curves, discrete Legendre transforms and the duality between
the two pressure functions.
"""

import logging
import math
from enum import Enum
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator

from src.utils import format_float, write_csv

logger = logging.getLogger(__name__)

# relative slack for "an interior grid point attains the minimum"
_TIE = 1e-9


class CurveKind(str, Enum):
    """What a SpectrumCurve holds."""
    T = "T"
    CAL_T = "calT"
    TAU_ESTIMATE = "tau_estimate"
    LEGENDRE = "legendre"
    COARSE = "coarse"
    PREDICTED = "predicted"


class SpectrumCurve(BaseModel):
    """Values of a spectrum function on a strictly increasing grid."""
    kind: CurveKind
    grid: List[float] = Field(..., min_length=1)
    values: List[float]
    edge: List[bool] = Field(default_factory=list, description="Value attained at the grid edge")
    depth: int = Field(0, description="Pressure or generation depth")
    scales: List[float] = Field(default_factory=list)
    digest: str = Field("", description="Model digest")
    label: str = Field("", description="Name used for file output")

    @model_validator(mode="after")
    def _check_grid(self):
        if len(self.values) != len(self.grid):
            raise ValueError(f"grid has {len(self.grid)} points but {len(self.values)} values")
        if not self.edge:
            self.edge = [False] * len(self.grid)
        if len(self.edge) != len(self.grid):
            raise ValueError("edge flags must match the grid")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        for v, e in zip(self.values, self.edge):
            if not math.isfinite(v) and not (v == -math.inf and e):
                raise ValueError(f"value {v} must be finite or a flagged -inf")
        return self

    @property
    def x(self) -> np.ndarray:
        return np.asarray(self.grid, dtype=np.float64)

    @property
    def y(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)

    def value_at(self, x: float) -> float:
        """Linear interpolation inside the grid."""
        return float(np.interp(x, self.x, self.y))

    def slopes(self) -> np.ndarray:
        """Secant slopes between consecutive grid points."""
        return np.diff(self.y) / np.diff(self.x)

    def clamp_above(self, ceiling: float = 0.0) -> "SpectrumCurve":
        """min(f, ceiling) pointwise."""
        return self.model_copy(update={"values": np.minimum(self.y, ceiling).tolist()})

    def to_csv(self, path: Union[str, Path]) -> Path:
        comment = f"kind={self.kind.value},depth={self.depth},model_hash={self.digest}"
        rows = [(format_float(x), format_float(v), e) for x, v, e in zip(self.grid, self.values, self.edge)]
        return write_csv(Path(path), comment, ["x", "value", "edge_flag"], rows)


def legendre(curve: SpectrumCurve, d_grid: Sequence[float]) -> SpectrumCurve:
    """
    f*(d) = min over the grid of d*q - f(q).

    A value is flagged edge=True when the minimum sits at a grid end and
    no interior point attains it; the true infimum may then be smaller.
    """
    d = np.asarray(d_grid, dtype=np.float64)
    if d.size == 0:
        raise ValueError("d_grid must not be empty")
    q, f = curve.x, curve.y
    if q.size < 3:
        raise ValueError("curve grid needs at least three points for a Legendre transform")
    table = d[:, None] * q[None, :] - f[None, :]
    values = table.min(axis=1)
    interior = table[:, 1:-1].min(axis=1)
    slack = _TIE * (1.0 + np.abs(values))
    edge = interior > values + slack
    if np.any(edge):
        logger.warning(f"Legendre transform of {curve.kind.value}: {int(edge.sum())} of {d.size} "
                       f"values attained at the grid edge")
    return SpectrumCurve(kind=CurveKind.LEGENDRE, grid=d.tolist(), values=values.tolist(),
                         edge=edge.tolist(), depth=curve.depth, digest=curve.digest,
                         label=f"legendre_{curve.label or curve.kind.value}")


class DualityPoint(BaseModel):
    d: float
    lhs: float = Field(..., description="calT*(d)")
    rhs: float = Field(..., description="d T*(1/d)")


class DualityReport(BaseModel):
    """max |calT*(d) - d T*(1/d)| over the usable d points."""
    max_discrepancy: float
    points: List[DualityPoint] = Field(default_factory=list)
    excluded: List[float] = Field(default_factory=list, description="d values dropped for edge flags")
    degenerate: bool = Field(False, description="calT is linear (single-point spectrum)")


def _is_linear(curve: SpectrumCurve, tol: float = 1e-6) -> bool:
    slopes = curve.slopes()
    return bool(slopes.size > 0 and slopes.max() - slopes.min() < tol)


def duality_check(T_curve: SpectrumCurve, calT_curve: SpectrumCurve, d_grid: Sequence[float]) -> DualityReport:
    """
    Compare calT*(d) with d * T*(1/d).

    A linear calT (max - min of finite-difference slopes < 1e-6) has a
    one-point spectrum; the check then runs at that single slope using
    exact intercepts.
    """
    if _is_linear(calT_curve):
        s = float(np.mean(calT_curve.slopes()))
        lhs = float(np.mean(s * calT_curve.x - calT_curve.y))
        rhs = s * float(np.mean(T_curve.x / s - T_curve.y))
        logger.info(f"calT is linear with slope {s:.9g}; duality checked at d = {s:.9g} only")
        return DualityReport(max_discrepancy=abs(lhs - rhs), points=[DualityPoint(d=s, lhs=lhs, rhs=rhs)],
                             degenerate=True)

    d = [float(x) for x in d_grid if x > 0]
    excluded = [float(x) for x in d_grid if x <= 0]
    if not d:
        raise ValueError("duality_check needs positive d values")
    left = legendre(calT_curve, d)
    right = legendre(T_curve, [1.0 / x for x in reversed(d)])
    right_values = list(reversed(right.values))
    right_edges = list(reversed(right.edge))
    points = []
    for i, x in enumerate(d):
        if left.edge[i] or right_edges[i]:
            excluded.append(x)
            continue
        points.append(DualityPoint(d=x, lhs=left.values[i], rhs=x * right_values[i]))
    if excluded:
        logger.warning(f"Duality check excluded {len(excluded)} d values: {excluded}")
    worst = max((abs(p.lhs - p.rhs) for p in points), default=math.nan)
    return DualityReport(max_discrepancy=worst, points=points, excluded=sorted(excluded))


def edge_slopes(curve: SpectrumCurve) -> Tuple[float, float]:
    """Secant slopes at the right and left grid ends (estimates of f'(+inf), f'(-inf))."""
    slopes = curve.slopes()
    return float(slopes[-1]), float(slopes[0])


def left_derivative(curve: SpectrumCurve, at: float) -> float:
    """Secant slope from the last grid point strictly left of ``at``."""
    below = curve.x < at - 1e-12
    if not np.any(below):
        raise ValueError(f"no grid point left of {at}")
    j = int(np.nonzero(below)[0][-1])
    return float((curve.value_at(at) - curve.y[j]) / (at - curve.x[j]))


def predicted_lower_spectrum(calT_curve: SpectrumCurve, d_grid: Sequence[float], t0: float) -> SpectrumCurve:
    """
    Legendre transform of min(calT, 0).

    Equals t0*d on [0, calT'(t0-)] and calT*(d) beyond.
    """
    clamped = calT_curve.clamp_above(0.0)
    curve = legendre(clamped, d_grid)
    return curve.model_copy(update={"kind": CurveKind.PREDICTED, "label": "predicted_lower"})


def junction_gap(calT_curve: SpectrumCurve, t0: float) -> Tuple[float, float]:
    """
    Continuity of the lower spectrum at d* = calT'(t0-).

    Returns:
        (d*, |t0*d* - calT*(d*)|)
    """
    d_star = left_derivative(calT_curve, t0)
    value = legendre(calT_curve, [d_star]).values[0]
    return d_star, abs(t0 * d_star - value)


def predicted_upper_spectrum(calT_curve: SpectrumCurve, d_grid: Sequence[float]) -> SpectrumCurve:
    """
    Level-set prediction for upper local dimensions.

    calT*(d) on [calT'(+inf), calT'(-inf)], 0 at d = 0 (the atoms) and a
    flagged -inf elsewhere.
    """
    s_plus, s_minus = edge_slopes(calT_curve)
    d = np.asarray(d_grid, dtype=np.float64)
    conj = legendre(calT_curve, d)
    values, edge = [], []
    for x, v, e in zip(d, conj.values, conj.edge):
        if x == 0.0:
            values.append(0.0)
            edge.append(False)
        elif s_plus - 1e-12 <= x <= s_minus + 1e-12:
            values.append(v)
            edge.append(e)
        else:
            values.append(-math.inf)
            edge.append(True)
    return SpectrumCurve(kind=CurveKind.PREDICTED, grid=d.tolist(), values=values, edge=edge,
                         depth=calT_curve.depth, digest=calT_curve.digest, label="predicted_upper")


class ControlBound(BaseModel):
    """sup over alpha > 0 of calT*(alpha)/alpha against t0."""
    sup_ratio: float
    argmax: float
    t0: float
    discrepancy: float


def control_bound_check(calT_curve: SpectrumCurve, d_grid: Sequence[float], t0: float) -> ControlBound:
    """The slope of the linear part of the lower spectrum equals t0."""
    d = [x for x in d_grid if x > 0]
    conj = legendre(calT_curve, d)
    ratios = [(v / x, x) for x, v, e in zip(d, conj.values, conj.edge) if not e]
    if not ratios:
        raise ValueError("no interior Legendre values for the control bound")
    best, argmax = max(ratios)
    return ControlBound(sup_ratio=best, argmax=argmax, t0=t0, discrepancy=abs(best - t0))
