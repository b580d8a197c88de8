"""
Unit tests for the random subshift

Tests admissibility, word counting and enumeration, mixing times and bridges.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.dynamics import (
    Word,
    bridge,
    check_admissible,
    count_words,
    enumerate_words,
    first_letter_starts,
    get_preset,
    is_admissible,
    mixing_time,
    sample_path,
    word_array,
)
from src.errors import HorizonTooShortError, InadmissibleWordError, NotMixingWithinCapError, ResourceGuardError


@pytest.fixture
def golden():
    return sample_path(get_preset("golden-mean"), horizon=64)


@pytest.fixture
def bernoulli():
    return sample_path(get_preset("bernoulli-2"), horizon=64)


@pytest.fixture
def random_path():
    return sample_path(get_preset("two-state-random"), horizon=64)


class TestAdmissibility:
    """Test admissibility checks."""

    def test_golden_forbids_two_two(self, golden):
        """Should reject symbol 2 followed by 2."""
        assert is_admissible(golden, Word.of(1, 2, 1))
        assert not is_admissible(golden, Word.of(1, 2, 2))

    def test_out_of_alphabet(self, bernoulli):
        """Should treat out-of-range symbols as inadmissible."""
        assert not is_admissible(bernoulli, Word.of(3))
        with pytest.raises(InadmissibleWordError):
            check_admissible(bernoulli, Word.of(1, 3))

    def test_word_past_horizon(self, bernoulli):
        """Should raise HorizonTooShortError for words past the horizon."""
        with pytest.raises(HorizonTooShortError):
            is_admissible(bernoulli, Word.of(1, 2, offset=63))


class TestCounting:
    """Test count_words and word arrays."""

    def test_full_shift_count(self, bernoulli):
        """Should count 2^n words on the full 2-shift."""
        assert count_words(bernoulli, 0, 10) == 1024

    def test_golden_counts_are_fibonacci(self, golden):
        """Should count F(n+2) golden-mean words."""
        assert [count_words(golden, 0, n) for n in range(1, 8)] == [2, 3, 5, 8, 13, 21, 34]

    def test_word_array_matches_count(self, random_path):
        """Should enumerate exactly count_words rows at every offset."""
        for offset in (0, 3, 7):
            words = word_array(random_path, offset, 6)
            assert words.shape == (count_words(random_path, offset, 6), 6)

    def test_word_array_is_lexicographic_and_admissible(self, random_path):
        """Should list distinct admissible words in lexicographic order."""
        words = word_array(random_path, 2, 5)
        keys = [tuple(int(s) for s in row) for row in words]
        assert keys == sorted(set(keys))
        assert all(is_admissible(random_path, Word(letters=k, base_offset=2)) for k in keys)

    def test_cursor_matches_word_array(self, random_path):
        """Should yield the same words in the same order as word_array."""
        cursor = enumerate_words(random_path, 1, 5)
        listed = [w.letters for w in cursor]
        assert listed == [tuple(int(s) for s in row) for row in word_array(random_path, 1, 5)]
        assert cursor.total == len(listed)

    def test_golden_enumeration_order(self, golden):
        """Should enumerate golden-mean words of length 3 lexicographically."""
        words = [w.letters for w in enumerate_words(golden, 0, 3)]
        assert words == [(1, 1, 1), (1, 1, 2), (1, 2, 1), (2, 1, 1), (2, 1, 2)]

    def test_first_letter_starts(self, bernoulli):
        """Should mark where the first letter changes."""
        assert first_letter_starts(word_array(bernoulli, 0, 3)).tolist() == [0, 4]

    def test_memory_guard(self, bernoulli, monkeypatch):
        """Should refuse enumerations above the memory guard."""
        monkeypatch.setenv("INVERSEMF_MEMORY_GUARD", "100")
        with pytest.raises(ResourceGuardError) as info:
            word_array(bernoulli, 0, 12)
        assert info.value.required > info.value.cap

    def test_invalid_length(self, bernoulli):
        """Should reject word length zero."""
        with pytest.raises(ValueError):
            count_words(bernoulli, 0, 0)


class TestMixingAndBridges:
    """Test mixing_time and bridge."""

    def test_full_shift_mixes_in_one_step(self, bernoulli):
        """Should return 1 for a full shift."""
        assert mixing_time(bernoulli, 0) == 1

    def test_golden_mixes_in_two_steps(self, golden):
        """Should return 2 for the golden-mean shift."""
        assert mixing_time(golden, 0) == 2

    def test_cap_is_honoured(self, golden):
        """Should reject a zero cap instead of falling back to the default."""
        with pytest.raises(ValueError):
            mixing_time(golden, 0, cap=0)
        with pytest.raises(NotMixingWithinCapError):
            mixing_time(golden, 0, cap=1)
        assert mixing_time(golden, 0, cap=2) == 2

    def test_bridge_uses_smallest_connector(self, golden):
        """Should join 2 and 2 through the only allowed connector 1."""
        joined = bridge(golden, Word.of(2), Word.of(2, offset=2), 1)
        assert joined.letters == (2, 1, 2)
        assert joined.base_offset == 0

    def test_bridge_is_admissible(self, random_path):
        """Should produce an admissible concatenation on a random path."""
        p = mixing_time(random_path, 3)
        w = Word(letters=tuple(int(s) for s in word_array(random_path, 0, 3)[-1]), base_offset=0)
        w_next = Word(letters=tuple(int(s) for s in word_array(random_path, 3 + p, 2)[0]), base_offset=3 + p)
        joined = bridge(random_path, w, w_next, p)
        assert len(joined) == 3 + p + 2
        assert is_admissible(random_path, joined)

    def test_word_text_round_trip(self):
        """Should read and write word literals through the shared parser."""
        word = Word.from_text("2,1,2@3")
        assert word.letters == (2, 1, 2)
        assert word.base_offset == 3
        assert word.to_text() == "2,1,2@3"
        assert Word.from_text("@0") == Word.of()
        with pytest.raises(ValueError):
            Word.from_text("a,b@0")

    def test_bridge_offset_mismatch(self, golden):
        """Should reject a second word at the wrong offset."""
        with pytest.raises(ValueError):
            bridge(golden, Word.of(1), Word.of(1, offset=5), 1)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
