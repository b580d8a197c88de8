"""
Spectrum report: the full pipeline from a model file to a bundle of CSV
curves, a JSON summary with pass/fail checks, a run manifest and an HTML page.

Gated checks decide the exit status of `report`; informational checks are
recorded with their numbers but never fail a run.
"""

import hashlib
import json
import logging
import math
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from src.config import Config
from src.dynamics import (
    EnvModel,
    EnvPath,
    Potential,
    birkhoff_table,
    count_words,
    ensure_valid,
    max_contraction,
    sample_path,
)
from src.errors import InverseMFError, ResourceGuardError, ScaleBelowFloorError, StructuralError
from src.measures import AtomList, atoms as enumerate_atoms
from src.thermo import (
    CurveKind,
    MeasureTable,
    RootCombo,
    SpectrumCurve,
    cauchy_gaps,
    control_bound_check,
    doubling_depths,
    duality_check,
    edge_slopes,
    gibbs_diagnostic,
    junction_gap,
    legendre,
    normalize_phi,
    predicted_lower_spectrum,
    predicted_upper_spectrum,
    pressure_root,
    rebind_path,
    rpf_measure,
)
from src.utils import format_float, write_csv, write_json
from .box_dimension import box_counts
from .html_report import create_html_report
from .local_dims import alpha_at, approx_degree, local_dims, sample_points
from .lq_spectrum import concavity_defect, forward_lq_estimate, lq_estimate, usable_scales
from .ubiquity import ubiquity_check, ubiquity_sample

logger = logging.getLogger(__name__)


def _grid(lo: float, hi: float, step: float) -> List[float]:
    count = int(round((hi - lo) / step))
    return [round(lo + i * step, 10) for i in range(count + 1)]


class Tolerances(BaseModel):
    """Thresholds of the report checks."""
    root: float = 1e-10
    pinned: float = 1e-6
    duality: float = 5e-3
    duality_random: float = 2e-2
    conservation: float = 1e-10
    rpf_residual: float = 1e-8
    eigencon: float = 1e-3
    junction: float = 1e-3
    control: float = 1e-3
    tau: float = 0.15
    tau_clamp: float = 0.05
    tau_forward: float = 0.2
    concavity: float = 0.02
    atom_dim: float = 0.05
    box: float = 0.05
    sandwich: float = 0.1
    sandwich_fraction: float = 0.02
    ubiquity: float = 0.15
    ubiquity_fraction: float = 0.05
    xi_hat_band: Tuple[float, float] = (0.85, 1.15)
    xi_hat_fraction: float = 0.9


class AnalysisConfig(BaseModel):
    """Settings of one spectrum_report run (JSON file)."""
    q_grid: List[float] = Field(default_factory=lambda: _grid(-4.0, 4.0, 0.05),
                                description="Grid of the calT curve")
    tau_q_grid: List[float] = Field(default_factory=lambda: _grid(-2.0, 2.0, 0.25),
                                    description="Exponents of the empirical L^q estimate")
    d_grid: Optional[List[float]] = Field(None, description="Interior d values (default from edge slopes)")
    d_points: int = Field(10, ge=2, description="Number of automatic interior d values")
    scales_log2: Tuple[int, int] = Field((-6, -12), description="L^q radii 2^a .. 2^b")
    local_dim_scales_log2: Tuple[int, int] = Field((-9, -14))
    box_scales_log2: Tuple[int, int] = Field((-4, -16))
    box_depth: Optional[int] = Field(None, ge=1)
    depth: int = Field(16, ge=4, description="Pressure depth")
    gen_depth: int = Field(14, ge=2, description="Measure table depth and atom generations")
    rpf_iters: int = Field(40, ge=2)
    offsets: int = Field(4, ge=1, description="Grid phases of the packing statistic")
    gibbs_depths: List[int] = Field(default_factory=lambda: [6, 8, 10, 12])
    horizon: Optional[int] = Field(None, ge=8)
    seed: Optional[int] = Field(None, ge=0)
    n_samples: int = Field(200, ge=0)
    n_top_atoms: int = Field(50, ge=0)
    n_ubiquity_points: int = Field(100, ge=0)
    xi_values: List[float] = Field(default_factory=lambda: [1.0, 1.5, 2.0])
    tolerances: Tolerances = Field(default_factory=Tolerances)

    @field_validator("q_grid", "tau_q_grid")
    @classmethod
    def _increasing(cls, v: List[float]) -> List[float]:
        if len(v) < 3 or any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("grids need at least three strictly increasing values")
        return v

    @model_validator(mode="after")
    def _check_ranges(self):
        for name in ("scales_log2", "local_dim_scales_log2", "box_scales_log2"):
            coarse, fine = getattr(self, name)
            if not 0 > coarse > fine:
                raise ValueError(f"{name} must run from a coarse to a finer negative exponent")
        if self.rpf_iters < self.gen_depth:
            raise ValueError("rpf_iters must be >= gen_depth")
        if any(x < 1.0 for x in self.xi_values):
            raise ValueError("xi_values must be >= 1")
        return self

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "AnalysisConfig":
        try:
            with open(path, "r", encoding="utf-8") as f:
                return cls.model_validate(json.load(f))
        except (OSError, json.JSONDecodeError, ValueError) as e:
            logger.error(f"Cannot load analysis config {path}: {e}")
            raise StructuralError(f"analysis config {path}: {e}") from e

    def digest(self) -> str:
        text = json.dumps(self.model_dump(mode="json"), sort_keys=True)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]

    def scales(self, which: str = "scales_log2") -> np.ndarray:
        coarse, fine = getattr(self, which)
        return 2.0 ** np.arange(coarse, fine - 1, -1, dtype=np.float64)


class ReportCheck(BaseModel):
    name: str
    passed: bool
    value: Optional[float] = None
    threshold: Optional[float] = None
    informational: bool = False
    detail: str = ""


class RunManifest(BaseModel):
    """Inputs and outputs of one run."""
    model_hash: str
    seed: int
    config_hash: str
    tool_version: str = Config.TOOL_VERSION
    runtimes: Dict[str, float] = Field(default_factory=dict, description="Seconds per stage")
    outputs: List[str] = Field(default_factory=list)


class SpectrumReport(BaseModel):
    model_hash: str
    normalized_hash: str = ""
    t0: float = math.nan
    checks: List[ReportCheck] = Field(default_factory=list)
    outputs: List[str] = Field(default_factory=list)
    runtimes: Dict[str, float] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if not c.informational)

    def failed(self) -> List[str]:
        return [c.name for c in self.checks if not c.passed and not c.informational]

    def check(self, name: str) -> ReportCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


class _Run:
    """Mutable state of one report run."""

    def __init__(self, report: SpectrumReport, out_dir: Optional[Path]):
        self.report = report
        self.out_dir = out_dir

    def add(self, name: str, passed: bool, value: Optional[float] = None, threshold: Optional[float] = None,
            informational: bool = False, detail: str = "") -> None:
        value = None if value is None else float(value)
        self.report.checks.append(ReportCheck(name=name, passed=bool(passed), value=value, threshold=threshold,
                                              informational=informational, detail=detail))
        level = logging.INFO if passed or informational else logging.WARNING
        logger.log(level, f"Check {name}: {'pass' if passed else 'FAIL'} value={value} threshold={threshold}")

    def bound(self, name: str, value: float, threshold: float, informational: bool = False,
              detail: str = "") -> None:
        ok = bool(np.isfinite(value) and value <= threshold)
        self.add(name, ok, value, threshold, informational, detail)

    @contextmanager
    def stage(self, name: str):
        start = time.perf_counter()
        logger.info(f"Stage {name} started")
        try:
            yield
        except Exception as e:
            logger.error(f"Stage {name} failed: {e}")
            raise
        finally:
            self.report.runtimes[name] = round(time.perf_counter() - start, 6)

    @contextmanager
    def optional(self, name: str):
        """Informational stage: toolkit failures become a failed informational check."""
        with self.stage(name):
            try:
                yield
            except InverseMFError as e:
                logger.warning(f"Informational stage {name} skipped: {e}")
                self.add(name, False, informational=True, detail=f"{type(e).__name__}: {e}")

    def csv(self, name: str, writer) -> None:
        if self.out_dir is None:
            return
        path = writer(self.out_dir / name)
        self.report.outputs.append(path.name)


def required_horizon(config: AnalysisConfig) -> int:
    return config.horizon or max(Config.PATH_HORIZON, config.gen_depth + config.rpf_iters + 64,
                                 config.depth + 16)


def preflight(path: EnvPath, config: AnalysisConfig) -> None:
    """
    Refuse runs whose cylinder enumeration exceeds the memory guard.

    Raises:
        ResourceGuardError: estimated accumulations above Config.get_memory_guard()
    """
    cap = Config.get_memory_guard()
    n = config.gen_depth + 1
    load = count_words(path, 0, n) * n
    if not path.model.is_locally_constant:
        load = max(load, count_words(path, 0, config.depth) * config.depth)
    if load > cap:
        logger.error(f"Pre-flight estimate {load:.3e} exceeds the memory guard {cap:.3e}")
        raise ResourceGuardError("spectrum report pre-flight", required=load, cap=cap)


def _spectrum_grid(q_grid: List[float], t0: float) -> List[float]:
    grid = sorted(set(q_grid))
    if min(abs(q - t0) for q in grid) > 1e-6:
        grid = sorted(grid + [t0])
    return grid


def _root_curve(path: EnvPath, grid: List[float], combo: RootCombo, n: int, tol: float,
                kind: CurveKind, label: str) -> SpectrumCurve:
    values = [pressure_root(path, q, combo, n=n, tol=tol) for q in grid]
    return SpectrumCurve(kind=kind, grid=grid, values=values, depth=n, digest=path.model.digest, label=label)


def root_curves(path: EnvPath, config: AnalysisConfig) -> Tuple[float, SpectrumCurve, SpectrumCurve]:
    """
    Bowen root t0, calT on the q grid (t0 added) and T on [-calT(q_max), -calT(q_min)].

    The T range is the image of the q grid under q -> -calT(q), so the
    Legendre minimizers of T stay inside its grid.
    """
    tol = config.tolerances.root
    t0 = pressure_root(path, combo=RootCombo.BOWEN, n=config.depth, tol=tol)
    grid = _spectrum_grid(config.q_grid, t0)
    calT = _root_curve(path, grid, RootCombo.CAL_T, config.depth, tol, CurveKind.CAL_T, "calT")
    t_grid = np.round(np.linspace(-calT.values[-1], -calT.values[0], len(config.q_grid)), 10).tolist()
    T_curve = _root_curve(path, t_grid, RootCombo.T, config.depth, tol, CurveKind.T, "T")
    logger.info(f"Root curves at depth {config.depth}: t0 = {t0:.12g}, {len(grid)} + {len(t_grid)} roots")
    return t0, calT, T_curve


def _d_grids(calT: SpectrumCurve, config: AnalysisConfig, d_star: float) -> Tuple[List[float], List[float]]:
    """(interior d values for duality, wider grid for the Legendre curves)."""
    s_plus, s_minus = edge_slopes(calT)
    if config.d_grid:
        interior = sorted(x for x in config.d_grid if x > 0)
    elif s_minus - s_plus < 1e-6:
        interior = [0.5 * s_plus, s_plus, 1.5 * s_plus]
    else:
        interior = np.linspace(s_plus, s_minus, config.d_points + 2)[1:-1].tolist()
    wide = set(np.round(np.linspace(0.0, 1.1 * max(s_minus, max(interior)), 45), 10).tolist())
    wide.update(round(x, 10) for x in interior)
    wide.add(round(d_star, 10))
    return interior, sorted(wide)


def spectrum_report(model: EnvModel, config: Optional[AnalysisConfig] = None,
                    out_dir: Optional[Union[str, Path]] = None) -> SpectrumReport:
    """
    Run the full pipeline on one model.

    Args:
        model: Environment model (validated here)
        config: Analysis settings (default AnalysisConfig())
        out_dir: Bundle directory; nothing is written when None

    Returns:
        SpectrumReport with gated and informational checks

    Raises:
        InvalidModelError: the model fails validation
        ResourceGuardError: the pre-flight estimate exceeds the memory guard
    """
    config = config or AnalysisConfig()
    tol = config.tolerances
    if config.seed is not None:
        model = model.with_seed(config.seed)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    report = SpectrumReport(model_hash=model.digest)
    run = _Run(report, out)
    single_state = len(model.states) == 1

    with run.stage("validate"):
        ensure_valid(model)
    with run.stage("sample"):
        path = sample_path(model, horizon=required_horizon(config))
        preflight(path, config)
    with run.stage("normalize"):
        normalized = normalize_phi(model, n=config.depth, path=path)
        path = rebind_path(path, normalized)
        report.normalized_hash = normalized.digest

    with run.stage("roots"):
        t0, calT, T_curve = root_curves(path, config)
        report.t0 = t0
        run.bound("pinned_calT_at_0", abs(pressure_root(path, 0.0, RootCombo.CAL_T, n=config.depth, tol=tol.root)
                                          + 1.0), tol.pinned)
        run.bound("pinned_calT_at_t0", abs(calT.value_at(t0)), tol.pinned)
        run.csv("calT.csv", calT.to_csv)
        run.csv("T.csv", T_curve.to_csv)

    with run.stage("legendre"):
        d_star, gap = junction_gap(calT, t0)
        interior, wide = _d_grids(calT, config, d_star)
        calT_star = legendre(calT, wide)
        T_star = legendre(T_curve, sorted({round(1.0 / d, 10) for d in interior}))
        lower = predicted_lower_spectrum(calT, wide, t0)
        upper = predicted_upper_spectrum(calT, wide)
        duality = duality_check(T_curve, calT, interior)
        control = control_bound_check(calT, sorted(set(interior) | {d_star}), t0)
        run.bound("junction_continuity", gap, tol.junction, detail=f"d* = {d_star:.9g}")
        run.bound("duality", duality.max_discrepancy, tol.duality if single_state else tol.duality_random,
                  detail=f"{len(duality.points)} points, {len(duality.excluded)} excluded")
        run.bound("control_bound", control.discrepancy, tol.control, detail=f"sup ratio {control.sup_ratio:.9g}")
        run.csv("calT_legendre.csv", calT_star.to_csv)
        run.csv("T_legendre.csv", T_star.to_csv)
        run.csv("predicted_lower.csv", lower.to_csv)
        run.csv("predicted_upper.csv", upper.to_csv)
        run.csv("duality.csv", lambda p: write_csv(p, f"model_hash={normalized.digest}", ["d", "lhs", "rhs"],
                                                    [(pt.d, pt.lhs, pt.rhs) for pt in duality.points]))

    with run.stage("rpf"):
        rpf = rpf_measure(path, 0, config.gen_depth, config.rpf_iters, residual_bound=tol.rpf_residual)
        table = rpf.table
        run.bound("rpf_residual", rpf.residual, tol.rpf_residual)
        running = rpf.log_lambda_running_mean
        window = min(config.depth, len(running))
        run.bound("eigencon", abs(running[window - 1]), tol.eigencon,
                  detail=f"mean over the first {window} lambdas")
        diagnostics = [gibbs_diagnostic(table.aggregate(n), path) for n in config.gibbs_depths
                       if n <= config.gen_depth]
        for diag in diagnostics:
            run.add(f"weak_gibbs_n{diag.depth}", diag.passed and not diag.fatal, diag.defect,
                    diag.epsilon + diag.allowance, detail=diag.worst_word)
        defects = [d.defect for d in diagnostics]
        run.add("weak_gibbs_defect_decreasing", all(b <= a + 1e-12 for a, b in zip(defects, defects[1:])),
                informational=not single_state)
        deepest = config.depth * 4 if path.model.is_locally_constant else config.depth
        gaps = cauchy_gaps(path, doubling_depths(4, deepest))
        run.add("pressure_cauchy_gaps", gaps.decreasing, gaps.gaps[-1], informational=not single_state,
                detail=f"depths {gaps.depths}")
        run.csv("measure.csv", table.to_csv)
        run.csv("eigencon.csv", lambda p: write_csv(
            p, f"model_hash={normalized.digest}", ["k", "lambda", "running_mean_log_lambda"],
            [(k, lam, m) for k, (lam, m) in enumerate(zip(rpf.lambdas, running))]))
        run.csv("gibbs.csv", lambda p: write_csv(
            p, f"model_hash={normalized.digest}", ["depth", "defect", "epsilon", "allowance", "passed"],
            [(d.depth, d.defect, d.epsilon, d.allowance, d.passed) for d in diagnostics]))

    with run.stage("atoms"):
        atom_list = enumerate_atoms(table, path, config.gen_depth)
        run.bound("conservation", atom_list.conservation_defect(), tol.conservation)
        run.csv("atoms.csv", atom_list.to_csv)

    with run.stage("lq"):
        _lq_checks(run, config, calT, atom_list, table, path, single_state)

    with run.stage("local_dims"):
        _local_dim_checks(run, config, atom_list, table, path, single_state)

    with run.stage("box_dimension"):
        box_depth = config.box_depth or _auto_box_depth(path, config)
        box = box_counts(path, box_depth, config.scales("box_scales_log2"))
        run.bound("box_dimension", abs(box.estimate - t0), tol.box, informational=not single_state,
                  detail=f"estimate {box.estimate:.6g} at depth {box_depth}")
        run.csv("box_counts.csv", lambda p: write_csv(p, f"depth={box_depth},model_hash={normalized.digest}",
                                                       ["scale", "count"], zip(box.scales, box.counts)))

    with run.stage("ubiquity"):
        _ubiquity_checks(run, config, atom_list, table, path, single_state)

    _write_bundle(run, config, model)
    logger.info(f"Spectrum report for {model.digest}: {'all gated checks passed' if report.passed else 'failed ' + ', '.join(report.failed())}")
    return report


def _lq_checks(run: _Run, config: AnalysisConfig, calT: SpectrumCurve, atom_list: AtomList,
               table: MeasureTable, path: EnvPath, single_state: bool) -> None:
    tol = config.tolerances
    q = config.tau_q_grid
    requested = config.scales()
    try:
        scales = usable_scales(requested, atom_list.residual)
    except ScaleBelowFloorError as e:
        logger.warning(f"L^q checks skipped: {e}")
        run.add("tau_scales", False, informational=True, detail=str(e))
        return
    # a clamped window is too coarse for the gated tolerances
    clamped = scales.size < requested.size
    if clamped:
        run.add("tau_scales", False, float(scales.size), float(requested.size), informational=True,
                detail=f"finest usable radius {scales[0]:.3e}")
    gated = single_state and not clamped
    tau_hat = lq_estimate(atom_list, q, scales, config.offsets)
    predicted = SpectrumCurve(kind=CurveKind.PREDICTED, grid=q, values=[min(calT.value_at(x), 0.0) for x in q],
                              depth=calT.depth, digest=calT.digest, label="tau_predicted")
    dev = np.abs(tau_hat.y - predicted.y)
    q_arr = np.asarray(q)
    clamp = np.abs(tau_hat.y[q_arr >= 1.0])
    if clamp.size:
        run.bound("tau_discrete_clamp", float(clamp.max()), tol.tau_clamp, informational=clamped)
    if np.any(q_arr >= 0):
        run.bound("tau_deviation", float(dev[q_arr >= 0].max()), tol.tau, informational=not gated,
                  detail=f"worst at q = {q_arr[q_arr >= 0][int(np.argmax(dev[q_arr >= 0]))]:g}")
    if np.any(q_arr < 0):
        run.bound("tau_deviation_negative_q", float(dev[q_arr < 0].max()), tol.tau, informational=True)
    run.bound("tau_concavity", concavity_defect(tau_hat), tol.concavity, informational=True)
    run.csv("tau_hat.csv", tau_hat.to_csv)
    run.csv("tau_predicted.csv", predicted.to_csv)

    with run.optional("tau_forward"):
        forward = forward_lq_estimate(table, path, q, config.scales(), config.offsets)
        known = [pressure_root(path, x, RootCombo.T, n=config.depth, tol=tol.root) for x in q]
        run.bound("tau_forward", float(np.max(np.abs(forward.y - np.asarray(known)))), tol.tau_forward,
                  informational=True)
        run.csv("tau_hat_forward.csv", forward.to_csv)


def _local_dim_checks(run: _Run, config: AnalysisConfig, atom_list: AtomList, table: MeasureTable,
                      path: EnvPath, single_state: bool) -> None:
    tol = config.tolerances
    scales = config.scales("local_dim_scales_log2")
    rows = []

    positions, weights = atom_list.point_masses
    top = np.argsort(-weights, kind="stable")[:config.n_top_atoms]
    if top.size:
        heavy = local_dims(atom_list, positions[top].tolist(), scales)
        worst = max(s.lower for s in heavy)
        run.bound("atom_local_dims", worst, tol.atom_dim, detail=f"{top.size} heaviest atoms")
        rows += [(s.x, "atom", s.lower, s.upper, s.slope, s.ratio_lower, math.nan, math.nan) for s in heavy]

    xs = sample_points(atom_list, config.n_samples, path.seed, "samples")
    if xs.size:
        samples = local_dims(atom_list, xs.tolist(), scales)
        depths = list(range(2, atom_list.gen_depth))
        above, below, in_band, counted = 0, 0, 0, 0
        for s in samples:
            alpha = alpha_at(table, path, s.x, table.depth).alpha
            degree = approx_degree(atom_list, s.x, depths)
            xi_hat = degree.xi_hat if degree.xi_hat is not None else math.nan
            if s.valid and s.ratio_lower > alpha + tol.sandwich:
                above += 1
            if s.valid and degree.xi_hat is not None and s.ratio_lower < alpha / degree.xi_hat - tol.sandwich:
                below += 1
            if degree.xi_hat is not None:
                counted += 1
                in_band += tol.xi_hat_band[0] <= degree.xi_hat <= tol.xi_hat_band[1]
            rows.append((s.x, "sample", s.lower, s.upper, s.slope, s.ratio_lower, alpha, xi_hat))
        run.bound("sandwich_upper", above / len(samples), tol.sandwich_fraction,
                  informational=not single_state, detail="ratio_lower <= alpha + tolerance")
        run.bound("sandwich_lower", below / len(samples), tol.sandwich_fraction, informational=True,
                  detail="ratio_lower >= alpha / xi_hat - tolerance")
        band = in_band / counted if counted else 0.0
        run.add("xi_hat_concentration", band >= tol.xi_hat_fraction, band, tol.xi_hat_fraction,
                informational=not single_state)

    header = ["x", "kind", "lower", "upper", "slope", "ratio_lower", "alpha", "xi_hat"]
    run.csv("local_dims.csv", lambda p: write_csv(p, f"model_hash={table.digest}", header, rows))


def _ubiquity_checks(run: _Run, config: AnalysisConfig, atom_list: AtomList, table: MeasureTable,
                     path: EnvPath, single_state: bool) -> None:
    tol = config.tolerances
    depth = table.depth - 1
    agg = table.aggregate(depth)
    psi = birkhoff_table(path, table.offset, depth, Potential.PSI)[0]
    phi = birkhoff_table(path, table.offset, depth, Potential.PHI)[0]
    d = float(psi[int(np.argmax(agg.masses))] / phi[int(np.argmax(agg.masses))])
    for xi in config.xi_values:
        balls = ubiquity_sample(atom_list, table, path, d, xi, depth=depth)
        check = ubiquity_check(atom_list, balls, d, xi, n_points=config.n_ubiquity_points,
                               tol=tol.ubiquity, seed=path.seed)
        run.bound(f"ubiquity_xi{xi:g}", check.fraction, tol.ubiquity_fraction,
                  informational=xi <= 1.0 or not single_state,
                  detail=f"d = {d:.6g}, {len(balls)} balls")


def _auto_box_depth(path: EnvPath, config: AnalysisConfig) -> int:
    rho = max_contraction(path.model)
    finest = 2.0 ** config.box_scales_log2[1]
    return int(math.floor(math.log(finest) / math.log(rho))) + 1


def _summary_markdown(report: SpectrumReport) -> str:
    lines = ["## Summary", "", f"- model hash: `{report.model_hash}`",
             f"- normalized model hash: `{report.normalized_hash}`", f"- t0: `{format_float(report.t0)}`",
             f"- result: **{'PASS' if report.passed else 'FAIL'}**", "", "## Checks", "",
             "| check | result | value | threshold | kind |", "|---|---|---|---|---|"]
    for c in report.checks:
        value = "" if c.value is None else f"{c.value:.6g}"
        threshold = "" if c.threshold is None else f"{c.threshold:.6g}"
        lines.append(f"| {c.name} | {'pass' if c.passed else 'FAIL'} | {value} | {threshold} | "
                     f"{'info' if c.informational else 'gated'} |")
    lines += ["", "## Files", ""] + [f"- {name}" for name in report.outputs]
    return "\n".join(lines)


def _write_bundle(run: _Run, config: AnalysisConfig, model: EnvModel) -> None:
    report = run.report
    if run.out_dir is None:
        return
    summary = {
        "model_hash": report.model_hash,
        "normalized_hash": report.normalized_hash,
        "t0": report.t0,
        "passed": report.passed,
        "failed": report.failed(),
        "checks": [c.model_dump() for c in report.checks],
    }
    write_json(run.out_dir / "summary.json", summary)
    report.outputs.append("summary.json")
    html = create_html_report("Inverse measure spectrum report", _summary_markdown(report),
                              {"Model": report.model_hash, "Tool version": Config.TOOL_VERSION})
    (run.out_dir / "report.html").write_text(html, encoding="utf-8")
    report.outputs.append("report.html")
    manifest = RunManifest(model_hash=report.model_hash, seed=model.seed, config_hash=config.digest(),
                           runtimes=report.runtimes, outputs=report.outputs + ["manifest.json"])
    write_json(run.out_dir / "manifest.json", manifest.model_dump())
    report.outputs.append("manifest.json")
