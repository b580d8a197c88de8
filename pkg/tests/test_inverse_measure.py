"""
Unit tests for the inverse measure

On bernoulli-2 the atoms are known in closed form: generation g holds
2^g atoms of weight 4^-g / 3, the boundary atoms are 0 and 1/3, and the
mass left beyond generation G is (2/3) 2^-G.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.dynamics import Word, get_preset, sample_path
from src.errors import NoAtomFoundError
from src.measures import (
    atoms,
    designated_atom,
    designated_atoms,
    gap_scan,
    interval_table,
    suffix_sets,
)
from src.thermo import rpf_measure


@pytest.fixture(scope="module")
def bernoulli():
    return sample_path(get_preset("bernoulli-2"), horizon=128)


@pytest.fixture(scope="module")
def bernoulli_table(bernoulli):
    return rpf_measure(bernoulli, offset=0, depth=6, iters=12).table


@pytest.fixture(scope="module")
def bernoulli_atoms(bernoulli, bernoulli_table):
    return atoms(bernoulli_table, bernoulli, gen_depth=4)


class TestIntervals:
    """Test interval_table and suffix_sets."""

    def test_records_partition_unit_interval(self, bernoulli_table):
        """Should tile [0, 1) with consecutive records."""
        records = interval_table(bernoulli_table.aggregate(3))
        assert records[0].lo == 0.0
        assert records[-1].hi == pytest.approx(1.0, abs=1e-12)
        assert all(a.hi == b.lo for a, b in zip(records, records[1:]))

    def test_record_length_is_mass(self, bernoulli_table):
        """Should give I^v the length mu([v])."""
        records = interval_table(bernoulli_table.aggregate(2))
        assert [r.length for r in records] == pytest.approx([4 / 9, 2 / 9, 2 / 9, 1 / 9], abs=1e-12)
        assert records[1].ell == pytest.approx(4 / 9, abs=1e-12)

    def test_suffix_sets_golden(self):
        """Should drop suffixes that cannot follow the last letter."""
        golden = sample_path(get_preset("golden-mean"), horizon=32)
        after_two = suffix_sets(golden, Word.of(2), 1)
        assert [w.letters for w in after_two.S] == [(1,)]
        assert after_two.S_prime == []
        after_one = suffix_sets(golden, Word.of(1), 2)
        assert [w.letters for w in after_one.S] == [(1, 1), (1, 2), (2, 1)]
        assert len(after_one.S_prime) == 2
        assert all(w.base_offset == 1 for w in after_one.S)

    def test_suffix_length(self, bernoulli):
        """Should require k >= 1."""
        with pytest.raises(ValueError):
            suffix_sets(bernoulli, Word.of(1), 0)


class TestAtoms:
    """Test atom enumeration on bernoulli-2."""

    def test_generation_zero(self, bernoulli_atoms):
        """Should put weight 1/3 at 2/3 and the boundary atoms at 0 and 1/3."""
        first = bernoulli_atoms.atom(0)
        assert first.position == pytest.approx(2.0 / 3.0, abs=1e-12)
        assert first.weight == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert (first.branch, first.sibling) == (1, 2)
        assert bernoulli_atoms.boundary_left == pytest.approx(0.0, abs=1e-12)
        assert bernoulli_atoms.boundary_right == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_generation_one(self, bernoulli_atoms):
        """Should put weight 1/12 at 4/9 and at 8/9."""
        gen1 = np.nonzero(bernoulli_atoms.generation == 1)[0]
        assert bernoulli_atoms.positions[gen1] == pytest.approx([4 / 9, 8 / 9], abs=1e-12)
        assert bernoulli_atoms.weights[gen1] == pytest.approx([1 / 12, 1 / 12], abs=1e-12)
        assert bernoulli_atoms.atom(int(gen1[1])).parent_word.letters == (2,)

    def test_generation_sizes_and_weights(self, bernoulli_atoms):
        """Should hold 2^g atoms of weight 4^-g / 3 in generation g."""
        assert len(bernoulli_atoms) == 15
        for g in range(4):
            sel = bernoulli_atoms.generation == g
            assert int(sel.sum()) == 2 ** g
            assert bernoulli_atoms.weights[sel] == pytest.approx(np.full(2 ** g, 4.0 ** -g / 3.0), abs=1e-12)

    def test_residual_and_conservation(self, bernoulli_atoms):
        """Should leave (2/3) 2^-G beyond the last generation and conserve mass."""
        assert bernoulli_atoms.residual == pytest.approx((2.0 / 3.0) * 2.0 ** -4, abs=1e-12)
        assert bernoulli_atoms.conservation_defect() < 1e-10
        assert bernoulli_atoms.zero_weight_count() == 0

    def test_mass_in_window(self, bernoulli_atoms):
        """Should find only the generation-zero atom near 2/3."""
        assert bernoulli_atoms.mass_in(np.array([0.66]), np.array([0.67]))[0] == pytest.approx(1.0 / 3.0)

    def test_weight_below(self, bernoulli_atoms):
        """Should sum the enumerated atoms inside I^1."""
        assert bernoulli_atoms.weight_below(Word.of(1)) == pytest.approx(1 / 12 + 1 / 24 + 1 / 48, abs=1e-12)

    def test_csv_output(self, bernoulli_atoms, tmp_path):
        """Should write one row per atom with the conservation data in the comment."""
        lines = bernoulli_atoms.to_csv(tmp_path / "atoms.csv").read_text(encoding="utf-8").splitlines()
        assert "gen_depth=4" in lines[0]
        assert lines[1] == "word,s,position,weight,position_err"
        assert len(lines) == 2 + 15

    def test_gen_depth_above_table(self, bernoulli, bernoulli_table):
        """Should refuse more generations than the table holds."""
        with pytest.raises(ValueError):
            atoms(bernoulli_table, bernoulli, gen_depth=7)

    def test_touching_pieces_give_zero_weights(self):
        """Should keep zero-weight atoms when the pieces tile [0,1]."""
        path = sample_path(get_preset("tiling"), horizon=128, strict=False)
        table = rpf_measure(path, offset=0, depth=4, iters=8).table
        result = atoms(table, path, gen_depth=3)
        assert result.zero_weight_count() == len(result) == 7
        assert result.residual == pytest.approx(1.0, abs=1e-12)
        assert result.conservation_defect() < 1e-10


class TestGapsAndDesignatedAtoms:
    """Test gap_scan and designated atoms."""

    def test_gap_scan(self, bernoulli):
        """Should find the gap 1/8 - 1/24 below both letters."""
        report = gap_scan(bernoulli, 0, 1)
        assert report.gap == pytest.approx(1.0 / 12.0, abs=1e-12)
        assert [g.letter for g in report.per_letter] == [1, 2]
        assert report.per_letter[0].level == 1

    def test_designated_atom(self, bernoulli, bernoulli_table):
        """Should pick the atom of weight 1/12 at 4/9 below letter 1."""
        z = designated_atom(bernoulli_table, bernoulli, Word.of(1), lookahead=1)
        assert z.atom.weight == pytest.approx(1.0 / 12.0, abs=1e-12)
        assert z.atom.position == pytest.approx(4.0 / 9.0, abs=1e-12)
        assert z.lookahead_used == 1
        assert z.psi_ratio == pytest.approx(np.log(1.0 / 12.0) / np.log(0.25), abs=1e-9)

    def test_designated_atoms_bulk(self, bernoulli, bernoulli_table):
        """Should find an atom of weight 4^-n / 3 below every depth-n word."""
        bulk = designated_atoms(bernoulli_table, bernoulli, 3, 2)
        assert np.all(bulk.level == 1)
        assert bulk.weights == pytest.approx(np.full(8, 4.0 ** -3 / 3.0), abs=1e-12)

    def test_no_atom_on_tiling(self):
        """Should raise NoAtomFoundError when every gap is empty."""
        path = sample_path(get_preset("tiling"), horizon=128, strict=False)
        table = rpf_measure(path, offset=0, depth=4, iters=8).table
        with pytest.raises(NoAtomFoundError):
            designated_atom(table, path, Word.of(1), lookahead=2)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
