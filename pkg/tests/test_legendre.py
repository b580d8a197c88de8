"""
Unit tests for spectrum curves and discrete Legendre transforms

The bernoulli-2 curves are built from their closed forms:
calT solves sum p^-t = 4^q and T(q) = -log(sum p^q) / log 4.
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.optimize import brentq

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.thermo import (
    CurveKind,
    SpectrumCurve,
    control_bound_check,
    duality_check,
    edge_slopes,
    junction_gap,
    legendre,
    left_derivative,
    predicted_lower_spectrum,
    predicted_upper_spectrum,
)

P = (2.0 / 3.0, 1.0 / 3.0)


def _cal_t(q: float) -> float:
    return brentq(lambda t: math.log(sum(p ** -t for p in P)) - q * math.log(4.0), -100.0, 100.0, xtol=1e-14)


def _t(q: float) -> float:
    return -math.log(sum(p ** q for p in P)) / math.log(4.0)


@pytest.fixture(scope="module")
def cal_t_curve():
    grid = np.round(np.arange(-4.0, 4.0 + 1e-9, 0.02), 10)
    return SpectrumCurve(kind=CurveKind.CAL_T, grid=grid.tolist(), values=[_cal_t(q) for q in grid])


@pytest.fixture(scope="module")
def t_curve(cal_t_curve):
    grid = np.linspace(-cal_t_curve.values[-1], -cal_t_curve.values[0], 801)
    return SpectrumCurve(kind=CurveKind.T, grid=grid.tolist(), values=[_t(q) for q in grid])


class TestSpectrumCurve:
    """Test SpectrumCurve validation."""

    def test_grid_must_increase(self):
        """Should reject a non-increasing grid."""
        with pytest.raises(ValueError):
            SpectrumCurve(kind=CurveKind.T, grid=[0.0, 0.0, 1.0], values=[1.0, 2.0, 3.0])

    def test_length_mismatch(self):
        """Should reject values that do not match the grid."""
        with pytest.raises(ValueError):
            SpectrumCurve(kind=CurveKind.T, grid=[0.0, 1.0], values=[1.0])

    def test_unflagged_infinity(self):
        """Should allow -inf only with an edge flag."""
        with pytest.raises(ValueError):
            SpectrumCurve(kind=CurveKind.PREDICTED, grid=[0.0, 1.0], values=[0.0, -math.inf])
        curve = SpectrumCurve(kind=CurveKind.PREDICTED, grid=[0.0, 1.0], values=[0.0, -math.inf],
                              edge=[False, True])
        assert curve.edge == [False, True]

    def test_csv_output(self, tmp_path):
        """Should write x, value and edge_flag columns under a comment line."""
        curve = SpectrumCurve(kind=CurveKind.T, grid=[0.0, 1.0, 2.0], values=[1.0, 0.0, -0.5], digest="abc")
        text = curve.to_csv(tmp_path / "T.csv").read_text(encoding="utf-8").splitlines()
        assert text[0].startswith("#")
        assert "model_hash=abc" in text[0]
        assert text[1] == "x,value,edge_flag"
        assert len(text) == 5


class TestLegendre:
    """Test legendre and its edge flags."""

    def test_quadratic(self):
        """Should give f*(d) = -d^2/4 for f(q) = -q^2."""
        grid = np.round(np.arange(-2.0, 2.0 + 1e-9, 0.01), 10)
        curve = SpectrumCurve(kind=CurveKind.T, grid=grid.tolist(), values=(-grid ** 2).tolist())
        conj = legendre(curve, [1.0, 10.0])
        assert conj.values[0] == pytest.approx(-0.25, abs=1e-9)
        assert conj.edge == [False, True]

    def test_too_few_points(self):
        """Should refuse grids with fewer than three points."""
        curve = SpectrumCurve(kind=CurveKind.T, grid=[0.0, 1.0], values=[0.0, 1.0])
        with pytest.raises(ValueError):
            legendre(curve, [0.5])

    def test_edge_slopes(self, cal_t_curve):
        """Should approach log4/log3 on the right and log4/log1.5 on the left."""
        s_plus, s_minus = edge_slopes(cal_t_curve)
        assert math.log(4.0) / math.log(3.0) < s_plus < s_minus < math.log(4.0) / math.log(1.5)

    def test_left_derivative(self, cal_t_curve):
        """Should use the grid point left of the evaluation point."""
        slope = left_derivative(cal_t_curve, 0.5)
        assert slope == pytest.approx((_cal_t(0.5) - _cal_t(0.48)) / 0.02, rel=1e-6)
        with pytest.raises(ValueError):
            left_derivative(cal_t_curve, -4.0)


class TestDuality:
    """Test duality_check, junction_gap and control_bound_check."""

    def test_bernoulli_duality(self, cal_t_curve, t_curve):
        """Should match calT*(d) with d T*(1/d) across the interior."""
        report = duality_check(t_curve, cal_t_curve, np.linspace(1.5, 3.0, 10))
        assert not report.degenerate
        assert len(report.points) == 10
        assert report.max_discrepancy < 5e-3

    def test_nonpositive_d_excluded(self, cal_t_curve, t_curve):
        """Should exclude d <= 0 from the comparison."""
        report = duality_check(t_curve, cal_t_curve, [0.0, 2.0])
        assert report.excluded == [0.0]
        assert [p.d for p in report.points] == [2.0]

    def test_linear_cal_t_is_degenerate(self):
        """Should check a one-point spectrum at its single slope."""
        s = math.log(3.0) / math.log(2.0)
        grid = np.linspace(-2.0, 2.0, 41)
        cal_t = SpectrumCurve(kind=CurveKind.CAL_T, grid=grid.tolist(), values=(s * grid - 1.0).tolist())
        t_grid = np.linspace(-2.0, 2.0, 41)
        t = SpectrumCurve(kind=CurveKind.T, grid=t_grid.tolist(), values=((t_grid - 1.0) / s).tolist())
        report = duality_check(t, cal_t, [1.0])
        assert report.degenerate
        assert report.points[0].d == pytest.approx(s)
        assert report.max_discrepancy < 1e-9

    def test_junction_continuity(self, cal_t_curve):
        """Should join t0*d and calT*(d) at d* = calT'(t0-)."""
        d_star, gap = junction_gap(cal_t_curve, 0.5)
        assert d_star == pytest.approx(math.log(4.0) / (0.5 * math.log(4.5)), rel=2e-2)
        assert gap < 1e-3

    def test_control_bound(self, cal_t_curve):
        """Should recover t0 as the sup of calT*(alpha)/alpha."""
        bound = control_bound_check(cal_t_curve, np.linspace(0.5, 4.0, 701), 0.5)
        assert bound.discrepancy < 1e-3


class TestPredictedSpectra:
    """Test the predicted lower and upper spectra."""

    def test_lower_is_linear_below_junction(self, cal_t_curve):
        """Should equal t0*d on [0, d*]."""
        lower = predicted_lower_spectrum(cal_t_curve, [0.0, 1.0, 1.5], 0.5)
        assert lower.values == pytest.approx([0.0, 0.5, 0.75], abs=1e-9)
        assert lower.label == "predicted_lower"

    def test_upper_outside_range(self, cal_t_curve):
        """Should put 0 at the atoms and a flagged -inf outside the slope range."""
        upper = predicted_upper_spectrum(cal_t_curve, [0.0, 2.0, 5.0])
        assert upper.values[0] == 0.0
        assert math.isfinite(upper.values[1])
        assert upper.values[2] == -math.inf
        assert upper.edge[2]


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
