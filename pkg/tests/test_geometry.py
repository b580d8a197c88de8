"""
Unit tests for interval geometry

Tests cylinder intervals, attractor extrema and the tail extrema tables.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.dynamics import (
    TailExtrema,
    Word,
    attractor_extrema,
    cylinder_arrays,
    cylinder_interval,
    get_preset,
    max_contraction,
    project,
    sample_path,
    word_array,
)
from src.errors import HorizonTooShortError, InadmissibleWordError


@pytest.fixture
def bernoulli():
    return sample_path(get_preset("bernoulli-2"), horizon=128)


@pytest.fixture
def random_path():
    return sample_path(get_preset("two-state-random"), horizon=128)


class TestCylinders:
    """Test cylinder_interval and cylinder_arrays."""

    def test_first_level(self, bernoulli):
        """Should map [0,1] onto the branch interval."""
        cyl = cylinder_interval(bernoulli, Word.of(2))
        assert (cyl.lo, cyl.hi) == pytest.approx((0.5, 0.75))

    def test_second_level(self, bernoulli):
        """Should compose inverse branches innermost first."""
        cyl = cylinder_interval(bernoulli, Word.of(1, 2))
        assert (cyl.lo, cyl.hi) == pytest.approx((0.125, 0.1875))
        assert cyl.diam == pytest.approx(1.0 / 16.0)

    def test_empty_word(self, bernoulli):
        """Should return [0,1] for the empty word."""
        cyl = cylinder_interval(bernoulli, Word())
        assert (cyl.lo, cyl.hi) == (0.0, 1.0)

    def test_inadmissible(self):
        """Should refuse inadmissible words."""
        golden = sample_path(get_preset("golden-mean"), horizon=16)
        with pytest.raises(InadmissibleWordError):
            cylinder_interval(golden, Word.of(2, 2))

    def test_arrays_are_ordered_and_disjoint(self, random_path):
        """Should list cylinders left to right without overlap."""
        words, lo, hi = cylinder_arrays(random_path, 0, 6)
        assert words.shape[0] == lo.size == hi.size
        assert np.all(hi > lo)
        assert np.all(lo[1:] >= hi[:-1] - 1e-15)

    def test_arrays_match_single_cylinders(self, random_path):
        """Should agree with cylinder_interval row by row."""
        words, lo, hi = cylinder_arrays(random_path, 2, 4)
        for i in (0, words.shape[0] // 2, words.shape[0] - 1):
            cyl = cylinder_interval(random_path, Word(letters=tuple(int(s) for s in words[i]), base_offset=2))
            assert cyl.lo == pytest.approx(lo[i], abs=1e-13)
            assert cyl.hi == pytest.approx(hi[i], abs=1e-13)

    def test_children_nest_in_parent(self, random_path):
        """Should place every depth-(n+1) cylinder inside its depth-n parent."""
        parents, p_lo, p_hi = cylinder_arrays(random_path, 0, 3)
        children, c_lo, c_hi = cylinder_arrays(random_path, 0, 4)
        index = {tuple(int(s) for s in row): i for i, row in enumerate(parents)}
        for row, a, b in zip(children, c_lo, c_hi):
            j = index[tuple(int(s) for s in row[:3])]
            assert p_lo[j] - 1e-15 <= a < b <= p_hi[j] + 1e-15

    def test_max_contraction(self):
        """Should return the largest inverse-branch derivative."""
        assert max_contraction(get_preset("bernoulli-2")) == pytest.approx(0.25)
        assert max_contraction(get_preset("middle-thirds")) == pytest.approx(1.0 / 3.0)


class TestExtrema:
    """Test attractor extrema and projections."""

    def test_bernoulli_attractor_extrema(self, bernoulli):
        """Should find min X = 0 and max X = 2/3."""
        ext = attractor_extrema(bernoulli, Word())
        assert ext.m == pytest.approx(0.0, abs=1e-12)
        assert ext.M == pytest.approx(2.0 / 3.0, abs=1e-12)
        assert ext.certified_error <= 1e-12

    def test_word_extrema(self, bernoulli):
        """Should find the extrema of X^1 = X / 4."""
        ext = attractor_extrema(bernoulli, Word.of(1))
        assert ext.M == pytest.approx(1.0 / 6.0, abs=1e-12)

    def test_horizon_too_short(self):
        """Should raise HorizonTooShortError when the path cannot reach the tolerance."""
        short = sample_path(get_preset("bernoulli-2"), horizon=5)
        with pytest.raises(HorizonTooShortError) as info:
            attractor_extrema(short, Word(), tol=1e-12)
        assert info.value.required > 5

    def test_project_error_is_diameter(self, bernoulli):
        """Should report the cylinder diameter as the error bound."""
        point = project(bernoulli, Word.of(2, 2, 2, 2, 2))
        assert point.error == pytest.approx(0.25 ** 5)
        assert abs(point.value - 2.0 / 3.0) <= point.error

    def test_tail_tables_match_direct_extrema(self, random_path):
        """Should agree with attractor_extrema on individual words."""
        tails = TailExtrema(random_path, 0, 80)
        words = word_array(random_path, 0, 4)
        m, big, err = tails.word_extrema(0, words)
        for i in (0, words.shape[0] - 1):
            ext = attractor_extrema(random_path, Word(letters=tuple(int(s) for s in words[i])), tol=1e-13)
            assert m[i] == pytest.approx(ext.m, abs=1e-11)
            assert big[i] == pytest.approx(ext.M, abs=1e-11)
        assert np.all(err < 1e-11)

    def test_root_extrema_telescope(self, random_path):
        """Should give the same minimum for the root and its leftmost child."""
        tails = TailExtrema(random_path, 0, 80)
        m_root, _, _ = tails.root_extrema(0)
        m, _, _ = tails.word_extrema(0, word_array(random_path, 0, 1))
        assert m[0] == m_root


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
