"""
Tests for the spectrum report pipeline

Runs a reduced analysis on bernoulli-2, whose roots, atoms and box
dimension are known in closed form, the shipped acceptance settings on
bernoulli-2 and reduced runs on the golden-mean, two-state and
middle-thirds models.
"""

import json
import math
import sys
from pathlib import Path

import pytest
from scipy.optimize import brentq

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.analysis import AnalysisConfig, required_horizon, root_curves, spectrum_report
from src.dynamics import get_preset, load_model, sample_path
from src.errors import InvalidModelError, ResourceGuardError, StructuralError

CONFIGS = Path(__file__).parent.parent / "configs"


def _small_config(**overrides) -> AnalysisConfig:
    settings = dict(
        gen_depth=10,
        rpf_iters=20,
        gibbs_depths=[6, 8, 10],
        scales_log2=(-4, -8),
        local_dim_scales_log2=(-6, -9),
        n_samples=20,
        n_top_atoms=5,
        n_ubiquity_points=20,
        xi_values=[1.0],
    )
    settings.update(overrides)
    return AnalysisConfig(**settings)


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    out = tmp_path_factory.mktemp("bernoulli")
    report = spectrum_report(get_preset("bernoulli-2"), _small_config(), out)
    return report, out


class TestAnalysisConfig:
    """Test AnalysisConfig validation and loading."""

    def test_defaults(self):
        """Should build the default q grid on [-4, 4] with step 0.05."""
        config = AnalysisConfig()
        assert len(config.q_grid) == 161
        assert config.q_grid[0] == -4.0 and config.q_grid[-1] == 4.0
        assert config.depth == 16

    def test_scales(self):
        """Should expand exponent pairs into radii."""
        config = _small_config(scales_log2=(-2, -4))
        assert config.scales().tolist() == [0.25, 0.125, 0.0625]

    def test_rejects_bad_settings(self):
        """Should reject short grids, reversed scales, short RPF runs and xi < 1."""
        with pytest.raises(ValueError):
            AnalysisConfig(q_grid=[0.0, 1.0])
        with pytest.raises(ValueError):
            AnalysisConfig(scales_log2=(-12, -6))
        with pytest.raises(ValueError):
            AnalysisConfig(gen_depth=14, rpf_iters=10)
        with pytest.raises(ValueError):
            AnalysisConfig(xi_values=[0.5])

    def test_from_file(self, tmp_path):
        """Should load the shipped config and refuse malformed files."""
        config = AnalysisConfig.from_file(CONFIGS / "analysis-default.json")
        assert config.gen_depth == 14
        bad = tmp_path / "bad.json"
        bad.write_text('{"depth": 2}', encoding="utf-8")
        with pytest.raises(StructuralError):
            AnalysisConfig.from_file(bad)

    def test_digest(self):
        """Should hash the settings deterministically."""
        assert AnalysisConfig().digest() == AnalysisConfig().digest()
        assert AnalysisConfig().digest() != AnalysisConfig(seed=5).digest()

    def test_required_horizon(self):
        """Should cover the RPF pullback and the pressure depth."""
        assert required_horizon(AnalysisConfig()) == 256
        assert required_horizon(AnalysisConfig(horizon=99)) == 99


class TestRootCurves:
    """Test root_curves."""

    def test_t0_is_inserted(self):
        """Should add t0 to the q grid and pin calT(0) = -1."""
        path = sample_path(get_preset("bernoulli-2"), horizon=64)
        config = _small_config(q_grid=[-1.0, 0.0, 1.0], depth=8)
        t0, cal_t, t_curve = root_curves(path, config)
        assert t0 == pytest.approx(0.5, abs=1e-8)
        assert cal_t.grid == pytest.approx([-1.0, 0.0, 0.5, 1.0])
        assert cal_t.value_at(0.0) == pytest.approx(-1.0, abs=1e-8)
        assert cal_t.value_at(t0) == pytest.approx(0.0, abs=1e-8)
        assert len(t_curve.grid) == 3
        assert t_curve.grid[0] == pytest.approx(-cal_t.values[-1], abs=1e-9)


class TestSpectrumReport:
    """Test the full pipeline on bernoulli-2."""

    def test_closed_form_checks_pass(self, bundle):
        """Should pass the pinned roots, RPF, conservation and box checks."""
        report, _ = bundle
        assert report.t0 == pytest.approx(0.5, abs=1e-8)
        for name in ("pinned_calT_at_0", "pinned_calT_at_t0", "rpf_residual", "eigencon",
                     "conservation", "junction_continuity", "box_dimension"):
            assert report.check(name).passed, name
        assert not report.check("box_dimension").informational

    def test_weak_gibbs_per_depth(self, bundle):
        """Should record one weak-Gibbs check per requested depth."""
        report, _ = bundle
        for n in (6, 8, 10):
            assert report.check(f"weak_gibbs_n{n}").passed

    def test_bundle_files(self, bundle):
        """Should write the curves, the summary, the manifest and the HTML page."""
        report, out = bundle
        for name in ("calT.csv", "T.csv", "duality.csv", "measure.csv", "atoms.csv", "tau_hat.csv",
                     "local_dims.csv", "box_counts.csv", "summary.json", "manifest.json", "report.html"):
            assert (out / name).exists(), name
            assert name in report.outputs
        summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
        assert summary["model_hash"] == report.model_hash
        assert summary["passed"] == report.passed
        manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["config_hash"] == _small_config().digest()
        assert "roots" in manifest["runtimes"]
        assert "<table>" in (out / "report.html").read_text(encoding="utf-8")

    def test_rerun_is_byte_identical(self, bundle, tmp_path):
        """Should reproduce the curves and summary byte for byte."""
        _, out = bundle
        spectrum_report(get_preset("bernoulli-2"), _small_config(), tmp_path)
        for name in ("calT.csv", "atoms.csv", "summary.json"):
            assert (tmp_path / name).read_bytes() == (out / name).read_bytes(), name

    def test_memory_guard(self, monkeypatch):
        """Should stop at the pre-flight estimate."""
        monkeypatch.setenv("INVERSEMF_MEMORY_GUARD", "1000")
        with pytest.raises(ResourceGuardError):
            spectrum_report(get_preset("bernoulli-2"), AnalysisConfig.from_file(CONFIGS / "analysis-guard.json"))

    def test_invalid_model(self):
        """Should refuse a model that fails validation."""
        with pytest.raises(InvalidModelError):
            spectrum_report(get_preset("tiling"), _small_config())


@pytest.fixture(scope="module")
def acceptance(tmp_path_factory):
    out = tmp_path_factory.mktemp("acceptance")
    config = AnalysisConfig.from_file(CONFIGS / "analysis-default.json")
    return spectrum_report(get_preset("bernoulli-2"), config, out)


class TestAcceptanceRun:
    """Test the shipped settings on bernoulli-2."""

    def test_all_gated_checks_pass(self, acceptance):
        """Should pass every gated check."""
        assert acceptance.passed, acceptance.failed()

    def test_lq_estimate_within_tolerance(self, acceptance):
        """Should match calT on q >= 0 with the full scale window."""
        deviation = acceptance.check("tau_deviation")
        assert not deviation.informational
        assert deviation.value <= 0.15, deviation.detail
        assert acceptance.check("tau_discrete_clamp").passed
        assert "tau_scales" not in [c.name for c in acceptance.checks]

    def test_heaviest_atoms(self, acceptance):
        """Should measure the 50 heaviest atoms."""
        check = acceptance.check("atom_local_dims")
        assert check.passed
        assert check.detail == "50 heaviest atoms"

    def test_gated_geometry_checks(self, acceptance):
        """Should gate the sandwich, approximation and ubiquity checks of a single-state model."""
        for name in ("sandwich_upper", "xi_hat_concentration", "ubiquity_xi1.5", "ubiquity_xi2",
                     "pressure_cauchy_gaps", "weak_gibbs_defect_decreasing"):
            check = acceptance.check(name)
            assert not check.informational, name
            assert check.passed, name
        assert acceptance.check("xi_hat_concentration").threshold == 0.9

    def test_informational_checks(self, acceptance):
        """Should report the lower sandwich and the xi = 1 ubiquity without gating them."""
        assert acceptance.check("sandwich_lower").informational
        assert acceptance.check("ubiquity_xi1").informational


class TestOtherModels:
    """Test the pipeline on the golden-mean, two-state and middle-thirds models."""

    def test_golden_mean(self):
        """Should pin the roots and keep the RPF eigenvalues at one."""
        report = spectrum_report(get_preset("golden-mean"), _small_config(rpf_iters=40))
        for name in ("pinned_calT_at_0", "pinned_calT_at_t0", "eigencon", "duality", "conservation"):
            assert report.check(name).passed, name
        gaps = report.check("pressure_cauchy_gaps")
        assert not gaps.informational
        assert gaps.passed, gaps.detail

    def test_two_state_random(self):
        """Should pin the roots and leave the monotonicity checks informational."""
        report = spectrum_report(load_model(CONFIGS / "two-state-random.json"), _small_config(rpf_iters=40))
        for name in ("pinned_calT_at_0", "pinned_calT_at_t0", "duality", "conservation"):
            assert report.check(name).passed, name
        assert report.check("eigencon").value < 5e-3
        for name in ("pressure_cauchy_gaps", "weak_gibbs_defect_decreasing", "box_dimension",
                     "sandwich_upper", "xi_hat_concentration"):
            assert report.check(name).informational, name

    def test_middle_thirds_completes(self, tmp_path):
        """Should finish the report when the truncation residual covers the fine scales."""
        report = spectrum_report(load_model(CONFIGS / "middle-thirds.json"), _small_config(), tmp_path)
        assert report.t0 == pytest.approx(math.log(2.0) / math.log(3.0), abs=1e-8)
        assert report.check("box_dimension").passed
        assert report.check("tau_scales").informational
        assert (tmp_path / "summary.json").exists()


class TestDeterminism:
    """Test thread-count independence and the Moran roots."""

    def test_thread_count_does_not_change_outputs(self, tmp_path, monkeypatch):
        """Should write identical curves, atoms and summaries for 1, 4 and 8 workers."""
        outputs = {}
        for threads in (1, 4, 8):
            monkeypatch.setenv("INVERSEMF_THREADS", str(threads))
            out = tmp_path / f"threads{threads}"
            spectrum_report(get_preset("bernoulli-2"), _small_config(), out)
            outputs[threads] = {name: (out / name).read_bytes()
                                for name in ("summary.json", "calT.csv", "atoms.csv")}
        assert outputs[4] == outputs[1]
        assert outputs[8] == outputs[1]

    def test_moran_cal_t(self):
        """Should solve 4^-q ((2/3)^-t + (1/3)^-t) = 1 to 1e-6 for q in [-2, 2] at the shipped depth."""
        grid = [-2.0 + 0.5 * k for k in range(9)]
        config = AnalysisConfig.from_file(CONFIGS / "analysis-default.json").model_copy(update={"q_grid": grid})
        path = sample_path(get_preset("bernoulli-2"), horizon=required_horizon(config))
        _, cal_t, _ = root_curves(path, config)
        for q in grid:
            expected = brentq(lambda t: math.log((2.0 / 3.0) ** -t + (1.0 / 3.0) ** -t) - q * math.log(4.0),
                              -50.0, 50.0, xtol=1e-14)
            assert cal_t.value_at(q) == pytest.approx(expected, abs=1e-6), q


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
