#!/usr/bin/env python3
"""
Command-line interface for the inverse-measure toolkit.

Subcommands: validate, sample-path, pressure, measure, atoms, spectrum,
analyze and report. Exit codes: 0 success, 2 invariant failure, 3 structural
error or unreadable input, 4 bracket failure, 5 acceptance failure or
non-convergence, 6 resource guard.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Callable, List, Optional

from rich.console import Console
from rich.table import Table

# Add src directory to Python path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.analysis import AnalysisConfig, SpectrumReport, root_curves, spectrum_report
from src.config import Config
from src.dynamics import (
    EnvModel,
    cylinder_arrays,
    ensure_valid,
    load_model,
    sample_path,
    validate_model,
)
from src.errors import (
    BracketFailureError,
    InadmissibleWordError,
    InverseMFError,
    NonConvergenceError,
    ResourceGuardError,
    StructuralError,
)
from src.measures import atoms
from src.thermo import (
    CurveKind,
    RootCombo,
    SpectrumCurve,
    legendre,
    normalize_phi,
    predicted_lower_spectrum,
    predicted_upper_spectrum,
    pressure_root,
    rebind_path,
    rpf_measure,
)
from src.utils import format_float, format_word, write_csv

EXIT_OK = 0
EXIT_INVARIANT = 2
EXIT_STRUCTURAL = 3
EXIT_BRACKET = 4
EXIT_ACCEPTANCE = 5
EXIT_RESOURCE = 6

logger = logging.getLogger(__name__)


def exit_code_for(error: Exception) -> int:
    """Map a failure to the exit-code vocabulary."""
    if isinstance(error, ResourceGuardError):
        return EXIT_RESOURCE
    if isinstance(error, BracketFailureError):
        return EXIT_BRACKET
    if isinstance(error, NonConvergenceError):
        return EXIT_ACCEPTANCE
    if isinstance(error, (StructuralError, InadmissibleWordError, OSError)):
        return EXIT_STRUCTURAL
    if isinstance(error, InverseMFError):
        return EXIT_INVARIANT
    if isinstance(error, ValueError):
        return EXIT_STRUCTURAL
    raise error


class InverseMFCLI:
    """
    Command-line front end.

    Each cmd_* method returns an exit code; failures raised by the toolkit
    are mapped by run().
    """

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.console = Console(stderr=True)

    # -- helpers ---------------------------------------------------------

    def load(self) -> EnvModel:
        model = load_model(self.args.model)
        if self.args.seed is not None:
            model = model.with_seed(self.args.seed)
        return model

    def analysis_config(self) -> AnalysisConfig:
        config_file = getattr(self.args, "config", None)
        config = AnalysisConfig.from_file(config_file) if config_file else AnalysisConfig()
        if self.args.seed is not None:
            config = config.model_copy(update={"seed": self.args.seed})
        return config

    def out_dir(self) -> Path:
        return Path(getattr(self.args, "out_dir", None) or Config.get_output_dir())

    def emit(self, header: List[str], rows: List[tuple]) -> None:
        """Machine output on stdout, unstyled."""
        if self.args.format == "json":
            print(json.dumps([dict(zip(header, row)) for row in rows], indent=2))
            return
        print(",".join(header))
        for row in rows:
            print(",".join(format_float(v) if isinstance(v, float) else str(v) for v in row))

    def normalized_path(self, model: EnvModel, depth: int, horizon: Optional[int] = None):
        ensure_valid(model)
        path = sample_path(model, horizon=horizon)
        if self.args.raw:
            return path
        return rebind_path(path, normalize_phi(model, n=depth, path=path))

    # -- subcommands -----------------------------------------------------

    def cmd_validate(self) -> int:
        report = validate_model(self.load())
        print(json.dumps(report.model_dump(mode="json"), indent=2, sort_keys=True))
        if report.passed:
            self.console.print(f"[green]Model {report.digest} is valid.[/green]")
            return EXIT_OK
        self.console.print(f"[red]Failed checks: {', '.join(report.failed_checks())}[/red]")
        return EXIT_INVARIANT

    def cmd_sample_path(self) -> int:
        model = self.load()
        path = sample_path(model, horizon=self.args.horizon)
        rows = [(path.start + k, s) for k, s in enumerate(path.states)]
        if self.args.out:
            written = write_csv(Path(self.args.out), f"seed={path.seed},model_hash={model.digest}",
                                ["k", "state"], rows)
            self.console.print(f"[green]Wrote {written}[/green]")
        else:
            self.emit(["k", "state"], rows)
        return EXIT_OK

    def cmd_pressure(self) -> int:
        model = self.load()
        depth = self.args.depth or Config.PRESSURE_DEPTH
        path = self.normalized_path(model, depth)
        combo = RootCombo(self.args.combo)
        qs = [0.0] if combo == RootCombo.BOWEN else sorted(set(self.args.q or [0.0]))
        values = [pressure_root(path, q, combo, n=depth, tol=self.args.tol) for q in qs]
        self.emit(["q", combo.value], list(zip(qs, values)))
        if self.args.out:
            kind = {RootCombo.CAL_T: CurveKind.CAL_T, RootCombo.T: CurveKind.T}.get(combo, CurveKind.PREDICTED)
            curve = SpectrumCurve(kind=kind, grid=qs, values=values, depth=depth, digest=path.model.digest,
                                  label=combo.value)
            self.console.print(f"[green]Wrote {curve.to_csv(self.args.out)}[/green]")
        return EXIT_OK

    def cmd_measure(self) -> int:
        model = self.load()
        config = self.analysis_config()
        depth = self.args.depth or config.gen_depth
        iters = max(self.args.iters or config.rpf_iters, depth)
        path = self.normalized_path(model, config.depth, horizon=self.args.offset + depth + iters + 8)
        result = rpf_measure(path, self.args.offset, depth, iters)
        out = self.out_dir()
        written = [result.table.to_csv(out / "measure.csv")]
        if self.args.cylinders:
            words, lo, hi = cylinder_arrays(path, self.args.offset, depth)
            rows = [(format_word(w, self.args.offset), a, b, b - a) for w, a, b in zip(words, lo, hi)]
            written.append(write_csv(out / "cylinders.csv", f"depth={depth},model_hash={path.model.digest}",
                                     ["word", "lo", "hi", "diam"], rows))
        self.console.print(f"RPF residual {result.residual:.3e} after {result.iters} iterations")
        for p in written:
            self.console.print(f"[green]Wrote {p}[/green]")
        return EXIT_OK

    def cmd_atoms(self) -> int:
        model = self.load()
        config = self.analysis_config()
        gen_depth = self.args.gen_depth or config.gen_depth
        iters = max(config.rpf_iters, gen_depth)
        path = self.normalized_path(model, config.depth, horizon=gen_depth + iters + 64)
        table = rpf_measure(path, 0, gen_depth, iters).table
        atom_list = atoms(table, path, gen_depth)
        written = atom_list.to_csv(self.out_dir() / "atoms.csv")
        self.console.print(f"{len(atom_list)} atoms, conservation defect {atom_list.conservation_defect():.3e}, "
                           f"residual {atom_list.residual:.3e}")
        self.console.print(f"[green]Wrote {written}[/green]")
        return EXIT_OK

    def cmd_spectrum(self) -> int:
        model = self.load()
        config = self.analysis_config()
        path = self.normalized_path(model, config.depth)
        t0, calT, T_curve = root_curves(path, config)
        slopes = calT.slopes()
        d_grid = sorted({0.0, *[round(float(x), 10) for x in slopes]})
        curves = [calT, T_curve, legendre(calT, d_grid), predicted_lower_spectrum(calT, d_grid, t0),
                  predicted_upper_spectrum(calT, d_grid)]
        out = self.out_dir()
        self.console.print(f"t0 = {t0:.12g}")
        for curve in curves:
            self.console.print(f"[green]Wrote {curve.to_csv(out / f'{curve.label}.csv')}[/green]")
        return EXIT_OK

    def show_report(self, report: SpectrumReport) -> None:
        table = Table(title=f"Spectrum report {report.model_hash}")
        table.add_column("check")
        table.add_column("result")
        table.add_column("value", justify="right")
        table.add_column("threshold", justify="right")
        table.add_column("kind")
        for c in report.checks:
            style = "green" if c.passed else ("yellow" if c.informational else "red")
            table.add_row(c.name, f"[{style}]{'pass' if c.passed else 'FAIL'}[/{style}]",
                          "" if c.value is None else f"{c.value:.6g}",
                          "" if c.threshold is None else f"{c.threshold:.6g}",
                          "info" if c.informational else "gated")
        self.console.print(table)

    def cmd_analyze(self) -> int:
        report = spectrum_report(self.load(), self.analysis_config())
        self.show_report(report)
        return EXIT_OK

    def cmd_report(self) -> int:
        out = self.out_dir()
        report = spectrum_report(self.load(), self.analysis_config(), out)
        self.show_report(report)
        self.console.print(f"[green]Wrote {len(report.outputs)} files to {out}[/green]")
        if not report.passed:
            self.console.print(f"[red]Acceptance failures: {', '.join(report.failed())}[/red]")
            return EXIT_ACCEPTANCE
        return EXIT_OK

    def run(self) -> int:
        handlers = {
            "validate": self.cmd_validate,
            "sample-path": self.cmd_sample_path,
            "pressure": self.cmd_pressure,
            "measure": self.cmd_measure,
            "atoms": self.cmd_atoms,
            "spectrum": self.cmd_spectrum,
            "analyze": self.cmd_analyze,
            "report": self.cmd_report,
        }
        handler: Callable[[], int] = handlers[self.args.command]
        try:
            return handler()
        except Exception as e:
            code = exit_code_for(e)
            logger.error(f"{self.args.command} failed ({type(e).__name__}): {e}")
            self.console.print(f"[red]Error: {e}[/red]")
            if isinstance(e, ResourceGuardError):
                self.console.print(f"[red]Required {e.required:.3e} accumulations, cap {e.cap:.3e} "
                                   f"(set INVERSEMF_MEMORY_GUARD to raise it)[/red]")
            return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inversemf",
        description="Multifractal analysis of inverse measures of random expanding interval maps"
    )
    parser.add_argument("--seed", type=int, help="Override the model seed")
    parser.add_argument("--threads", type=int, help="Worker count (default INVERSEMF_THREADS or 1)")
    parser.add_argument("--format", choices=["csv", "json"], default="csv", help="Stdout format")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_model(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("model", help="Model JSON file")
        return p

    with_model("validate", "Validate a model file and print the report")

    p = with_model("sample-path", "Sample the environment path")
    p.add_argument("--horizon", type=int, help=f"Path horizon (default: {Config.PATH_HORIZON})")
    p.add_argument("--out", help="CSV file (default: stdout)")

    p = with_model("pressure", "Solve the pressure equations")
    p.add_argument("--combo", choices=[c.value for c in RootCombo], default=RootCombo.CAL_T.value)
    p.add_argument("--q", type=float, nargs="*", help="Parameter values (default: 0)")
    p.add_argument("--depth", type=int, help=f"Pressure depth (default: {Config.PRESSURE_DEPTH})")
    p.add_argument("--tol", type=float, default=Config.ROOT_TOL)
    p.add_argument("--raw", action="store_true", help="Skip phi normalization")
    p.add_argument("--out", help="SpectrumCurve CSV file")

    for name, help_text in [("measure", "RPF eigenmeasure masses of depth-n cylinders"),
                            ("atoms", "Atoms of the inverse measure"),
                            ("spectrum", "calT and T curves with their Legendre transforms"),
                            ("analyze", "Run all checks and print them"),
                            ("report", "Run all checks and write the report bundle")]:
        p = with_model(name, help_text)
        p.add_argument("--config", help="Analysis config JSON")
        p.add_argument("--out-dir", help=f"Output directory (default: {Config.OUTPUT_DIR})")
        if name in ("measure", "atoms", "spectrum"):
            p.add_argument("--raw", action="store_true", help="Skip phi normalization")
        if name == "measure":
            p.add_argument("--depth", type=int, help="Cylinder depth")
            p.add_argument("--iters", type=int, help="Pullback steps")
            p.add_argument("--offset", type=int, default=0)
            p.add_argument("--cylinders", action="store_true", help="Also write cylinders.csv")
        if name == "atoms":
            p.add_argument("--gen-depth", type=int, help="Atom generations")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point"""
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        os.environ["INVERSEMF_THREADS"] = str(max(1, args.threads))
    logging.basicConfig(
        level=getattr(logging, Config.get_log_level(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    return InverseMFCLI(args).run()


if __name__ == "__main__":
    sys.exit(main())
