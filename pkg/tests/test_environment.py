"""
Unit tests for environment models

Tests model loading, structural checks, validation and path sampling.
"""

import json
import math
import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.dynamics import (
    EnvModel,
    ensure_valid,
    get_preset,
    load_model,
    mean_conditions,
    sample_path,
    save_model,
    shift_path,
    stationary_distribution,
    validate_model,
)
from src.dynamics.environment import _is_irreducible
from src.errors import InvalidModelError, StructuralError

CONFIGS = Path(__file__).parent.parent / "configs"


class TestModelLoading:
    """Test model files and structural errors."""

    def test_load_bernoulli_file(self):
        """Should load the bernoulli-2 model file."""
        model = load_model(CONFIGS / "bernoulli-2.json")
        assert model.name == "bernoulli-2"
        assert len(model.states) == 1
        assert model.states[0].alphabet_size == 2
        assert model.is_locally_constant

    def test_missing_file(self, tmp_path):
        """Should raise StructuralError for a missing file."""
        with pytest.raises(StructuralError):
            load_model(tmp_path / "nope.json")

    def test_malformed_json(self, tmp_path):
        """Should raise StructuralError for malformed JSON."""
        bad = tmp_path / "bad.json"
        bad.write_text("{ not json", encoding="utf-8")
        with pytest.raises(StructuralError):
            load_model(bad)

    def test_wrong_format(self, tmp_path):
        """Should reject an unknown schema version."""
        data = get_preset("bernoulli-2").model_dump(mode="json")
        data["format"] = "inversemf/99"
        path = tmp_path / "model.json"
        path.write_text(json.dumps(data), encoding="utf-8")
        with pytest.raises(StructuralError):
            load_model(path)

    def test_transition_shape_mismatch(self):
        """Should reject a transition matrix of the wrong shape."""
        data = get_preset("bernoulli-2").model_dump(mode="json")
        data["transition"] = [[0.5, 0.5], [0.5, 0.5]]
        with pytest.raises(ValueError):
            EnvModel.model_validate(data)

    def test_all_zero_admissibility_row(self):
        """Should reject an admissibility matrix with an all-zero row."""
        data = get_preset("bernoulli-2").model_dump(mode="json")
        data["admissibility"] = {"0->0": [[1, 1], [0, 0]]}
        with pytest.raises(ValueError):
            EnvModel.model_validate(data)

    def test_branch_outside_unit_interval(self):
        """Should reject a branch interval that is not inside [0,1]."""
        data = get_preset("bernoulli-2").model_dump(mode="json")
        data["states"][0]["branches"][1]["b"] = 1.5
        with pytest.raises(ValueError):
            EnvModel.model_validate(data)

    def test_save_and_reload_keeps_digest(self, tmp_path):
        """Should write canonical JSON that reloads to the same digest."""
        model = get_preset("two-state-random")
        path = save_model(model, tmp_path / "model.json")
        assert load_model(path).digest == model.digest


class TestValidation:
    """Test validate_model and ensure_valid."""

    def test_bernoulli_is_valid(self):
        """Should pass every check on bernoulli-2."""
        report = validate_model(get_preset("bernoulli-2"))
        assert report.passed
        assert report.failed_checks() == []

    def test_two_state_random_is_valid(self):
        """Should pass every check on the two-state random model."""
        assert validate_model(get_preset("two-state-random")).passed

    def test_tiling_fails_zero_lebesgue(self):
        """Should flag branches that tile [0,1]."""
        report = validate_model(load_model(CONFIGS / "tiling.json"))
        assert not report.passed
        assert "zero_lebesgue" in report.failed_checks()

    def test_single_branch_fails_alphabet(self):
        """Should flag a model whose states all have one symbol."""
        report = validate_model(get_preset("single-branch"))
        assert "alphabet_nontrivial" in report.failed_checks()

    def test_mean_conditions_bernoulli(self):
        """Should give c_psi = log 4 and c_phi = log(3/2)."""
        c_psi, c_phi = mean_conditions(get_preset("bernoulli-2"))
        assert c_psi == pytest.approx(math.log(4.0), abs=1e-12)
        assert c_phi == pytest.approx(math.log(1.5), abs=1e-12)

    def test_ensure_valid_refuses_tiling(self):
        """Should raise InvalidModelError naming the failed check."""
        with pytest.raises(InvalidModelError) as info:
            ensure_valid(get_preset("tiling"))
        assert "zero_lebesgue" in info.value.failed_checks

    def test_stationary_distribution(self):
        """Should return the left Perron vector of Q."""
        pi = stationary_distribution(np.array([[0.6, 0.4], [0.3, 0.7]]))
        assert pi == pytest.approx([3.0 / 7.0, 4.0 / 7.0], abs=1e-12)


class TestIrreducibility:
    """Test the reachability closure behind the chain checks."""

    def test_long_cycle_is_irreducible(self):
        """Should accept a long cycle whose path counts overflow fixed-width integers."""
        n = 90
        cycle = np.roll(np.eye(n, dtype=np.int64), 1, axis=1)
        support = np.clip(cycle + np.eye(n, dtype=np.int64) + np.roll(cycle, 1, axis=1), 0, 1)
        assert _is_irreducible(support)

    def test_absorbing_block_is_reducible(self):
        """Should reject a chain with a state that cannot be left."""
        support = np.ones((60, 60), dtype=np.int64)
        support[-1, :-1] = 0
        assert not _is_irreducible(support)


class TestPathSampling:
    """Test sample_path and shift_path."""

    def test_same_seed_same_path(self):
        """Should reproduce the path from (seed, stream label)."""
        model = get_preset("two-state-random")
        assert sample_path(model, horizon=200).states == sample_path(model, horizon=200).states

    def test_seed_changes_path(self):
        """Should give a different path for a different seed."""
        a = sample_path(get_preset("two-state-random", seed=1), horizon=200)
        b = sample_path(get_preset("two-state-random", seed=2), horizon=200)
        assert a.states != b.states

    def test_stream_labels_are_independent(self):
        """Should give different paths for different stream labels."""
        model = get_preset("two-state-random")
        assert sample_path(model, 200, "a").states != sample_path(model, 200, "b").states

    def test_path_uses_allowed_transitions(self):
        """Should only step along positive transition probabilities."""
        model = get_preset("two-state-random")
        path = sample_path(model, horizon=500)
        q = model.transition_matrix
        ids = np.asarray(path.states)
        assert np.all(q[ids[:-1], ids[1:]] > 0)
        assert path.horizon == 500

    def test_both_states_visited(self):
        """Should visit both states of the two-state chain."""
        path = sample_path(get_preset("two-state-random"), horizon=500)
        assert set(path.states) == {0, 1}

    def test_invalid_horizon(self):
        """Should reject a non-positive horizon."""
        with pytest.raises(ValueError):
            sample_path(get_preset("bernoulli-2"), horizon=0)

    def test_strict_refuses_invalid_model(self):
        """Should refuse to sample an invalid model unless strict=False."""
        model = get_preset("tiling")
        with pytest.raises(InvalidModelError):
            sample_path(model, horizon=10)
        assert sample_path(model, horizon=10, strict=False).horizon == 10

    def test_shift_path(self):
        """Should drop the first k states and advance the start index."""
        path = sample_path(get_preset("two-state-random"), horizon=50)
        shifted = shift_path(path, 5)
        assert shifted.states == path.states[5:]
        assert shifted.start == 5
        with pytest.raises(ValueError):
            shift_path(path, 51)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
