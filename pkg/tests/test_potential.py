"""
Unit tests for branch potentials and Birkhoff sums
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.dynamics import (
    Potential,
    Word,
    birkhoff_bounds,
    birkhoff_table,
    eval_phi,
    eval_psi,
    get_preset,
    sample_path,
    variation_modulus,
    word_array,
)


@pytest.fixture
def bernoulli():
    return sample_path(get_preset("bernoulli-2"), horizon=64)


@pytest.fixture
def moebius():
    return sample_path(get_preset("lipschitz-moebius"), horizon=64)


class TestPointwise:
    """Test eval_psi and eval_phi."""

    def test_affine_psi_is_log_width(self, bernoulli):
        """Should give psi = log(1/4) everywhere on an affine branch of width 1/4."""
        assert eval_psi(bernoulli, 0, 1, 0.1) == pytest.approx(math.log(0.25))
        assert eval_psi(bernoulli, 3, 2, 0.7) == pytest.approx(math.log(0.25))

    def test_constant_phi(self, bernoulli):
        """Should return log p on each symbol."""
        assert eval_phi(bernoulli, 0, 2, 0.6) == pytest.approx(math.log(1.0 / 3.0))

    def test_point_outside_branch(self, bernoulli):
        """Should reject x outside the branch interval."""
        with pytest.raises(ValueError):
            eval_phi(bernoulli, 0, 1, 0.4)

    def test_symbol_outside_alphabet(self, bernoulli):
        """Should reject a symbol outside the alphabet."""
        with pytest.raises(ValueError):
            eval_psi(bernoulli, 0, 3, 0.1)


class TestBirkhoffSums:
    """Test birkhoff_bounds, birkhoff_table and variation_modulus."""

    def test_locally_constant_sums(self, bernoulli):
        """Should give equal sup and inf for locally constant potentials."""
        bounds = birkhoff_bounds(bernoulli, Word.of(1, 2), Potential.PHI)
        assert bounds.sup_sum == pytest.approx(math.log(2.0 / 9.0))
        assert bounds.inf_sum == pytest.approx(bounds.sup_sum)
        psi = birkhoff_bounds(bernoulli, Word.of(1, 2), Potential.PSI)
        assert psi.sup_sum == pytest.approx(2.0 * math.log(0.25))

    def test_empty_word(self, bernoulli):
        """Should give zero sums for the empty word."""
        bounds = birkhoff_bounds(bernoulli, Word(), Potential.PHI)
        assert (bounds.sup_sum, bounds.inf_sum, bounds.n) == (0.0, 0.0, 0)

    def test_table_aligned_with_words(self, moebius):
        """Should align table rows with word_array rows."""
        words = word_array(moebius, 0, 5)
        sup_sum, inf_sum = birkhoff_table(moebius, 0, 5, Potential.PHI)
        for i in (0, 7, words.shape[0] - 1):
            bounds = birkhoff_bounds(moebius, Word(letters=tuple(int(s) for s in words[i])), Potential.PHI)
            assert sup_sum[i] == pytest.approx(bounds.sup_sum)
            assert inf_sum[i] == pytest.approx(bounds.inf_sum)

    def test_sup_not_below_inf(self, moebius):
        """Should order sup and inf on Lipschitz potentials."""
        for which in (Potential.PHI, Potential.PSI):
            sup_sum, inf_sum = birkhoff_table(moebius, 0, 6, which)
            assert np.all(sup_sum >= inf_sum)
            assert np.any(sup_sum > inf_sum)

    def test_variation_modulus_covers_spread(self, moebius):
        """Should bound the Birkhoff spread by n * eps(n)."""
        n = 6
        sup_sum, inf_sum = birkhoff_table(moebius, 0, n, Potential.PHI)
        eps = variation_modulus(moebius.model, n, Potential.PHI)
        assert np.max(sup_sum - inf_sum) <= n * eps + 1e-12

    def test_variation_modulus_monotone(self):
        """Should have n*eps(n) non-decreasing and eps(n) non-increasing."""
        model = get_preset("lipschitz-moebius")
        eps = [variation_modulus(model, n) for n in range(1, 12)]
        assert all(a >= b - 1e-15 for a, b in zip(eps, eps[1:]))
        totals = [n * e for n, e in zip(range(1, 12), eps)]
        assert all(a <= b + 1e-15 for a, b in zip(totals, totals[1:]))

    def test_variation_modulus_constant_potential(self):
        """Should be zero for constant potentials."""
        assert variation_modulus(get_preset("bernoulli-2"), 10) == 0.0
        with pytest.raises(ValueError):
            variation_modulus(get_preset("bernoulli-2"), 0)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
