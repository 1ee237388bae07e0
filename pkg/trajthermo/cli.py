"""
Command-Line Interface
run | analyze | audit | list-scenarios
"""

import sys
import time
from typing import Any, Callable, Dict, List, Optional, Tuple

import click
from rich.console import Console
from rich.table import Table

from trajthermo import __version__
from trajthermo.core.config import get_settings
from trajthermo.core.exceptions import AuditFailure, InputValidationError, TrajThermoError
from trajthermo.core.logging import get_logger, perf_logger, setup_logging
from trajthermo.models.requests import AnalyzeConfig, RunConfig, load_config, read_json_document
from trajthermo.scenarios.catalog import catalog
from trajthermo.services.analysis_service import AnalysisService, run_batch
from trajthermo.services.report_service import ReportService


logger = get_logger(__name__)
console = Console()
err_console = Console(stderr=True)


def parse_tolerances(values: Tuple[str, ...]) -> Dict[str, float]:
    """'name=value' pairs from repeated --tolerance flags."""
    parsed: Dict[str, float] = {}
    for item in values:
        name, sep, raw = item.partition("=")
        if not sep or not name.strip():
            raise InputValidationError("Malformed --tolerance", [f"{item!r}: expected name=value"])
        try:
            parsed[name.strip()] = float(raw)
        except ValueError as exc:
            raise InputValidationError("Malformed --tolerance", [f"{item!r}: value is not a number"]) from exc
    return parsed


def _execute(name: str, action: Callable[[], int]) -> None:
    """Run a command body and map errors to exit codes (2 validation, 3 numerical, 1 unexpected)."""
    start = time.time()
    try:
        code = action()
    except TrajThermoError as exc:
        err_console.print(f"[red]error[/red] [{exc.error_code}] {exc.message}")
        logger.error("Command failed", command=name, error=exc.to_dict())
        code = exc.exit_code
    except Exception as exc:
        err_console.print(f"[red]internal error[/red] {type(exc).__name__}: {exc}")
        logger.exception("Command crashed", command=name)
        code = 1
    perf_logger.log_run_time(name, time.time() - start, code)
    sys.exit(code)


def run_options(func):
    """Options shared by run and audit."""
    options = [
        click.option("--scenario", help="Built-in scenario name (see list-scenarios)."),
        click.option("--beta", type=float, help="Inverse temperature."),
        click.option("--step", type=float, help="RK4 step."),
        click.option("--t0", type=float, help="Start of the window."),
        click.option("--tf", type=float, help="End of the window."),
        click.option("--gamma", type=float, help="Damping rate override."),
        click.option("--omega0", type=float, help="Level frequency override."),
        click.option("--ramp-rate", type=float, help="Driven-ramp slope override."),
        click.option("--convention", type=click.Choice(["sz", "sz-half"]), help="H = omega0 sz or omega0/2 sz."),
        click.option("--regularize-delta", type=float, help="Mix states with I/d before analysis."),
        click.option("--tolerance", "tolerance", multiple=True, help="Override a tolerance, name=value."),
        click.option("--quadrature", type=click.Choice(["trapezoid", "simpson"]), help="Totals quadrature."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _overrides(**flags: Any) -> Dict[str, Any]:
    tolerance = flags.pop("tolerance", ())
    overrides = dict(flags)
    if tolerance:
        overrides["tolerances"] = parse_tolerances(tolerance)
    return overrides


@click.group()
@click.version_option(__version__, prog_name="trajthermo")
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False))
def cli(log_level: Optional[str]):
    """Trajectory-based thermodynamics of open quantum systems."""
    settings = get_settings()
    setup_logging(log_level or settings.log_level, settings.logs_dir)


@cli.command()
@click.option("--config", "configs", multiple=True, type=click.Path(dir_okay=False), help="JSON run config (repeat for a batch).")
@run_options
@click.option("--out-csv", help="Ledger CSV path.")
@click.option("--out-json", help="Summary JSON path.")
@click.option("--out-snapshots", help="Also export the propagated states.")
def run(configs: Tuple[str, ...], **flags):
    """Propagate a scenario or generator and write the ledger."""

    def action() -> int:
        overrides = _overrides(**flags)
        if len(configs) > 1:
            parsed = [load_config(path, RunConfig, overrides) for path in configs]
            outcomes = run_batch(parsed)
            for outcome in sorted(outcomes, key=lambda o: o["run"]):
                status = "ok" if outcome["exit_code"] == 0 else outcome["error"]["message"]
                console.print(f"{outcome['run']}: {status}")
            return max(o["exit_code"] for o in outcomes)
        cfg = load_config(configs[0] if configs else None, RunConfig, overrides)
        result = AnalysisService().run(cfg)
        summary = ReportService().write(result, cfg.out_csv, cfg.out_json)
        console.print(f"Wrote {summary.outputs['csv']} ({summary.points} rows) and {summary.outputs['json']}")
        return 0

    _execute("run", action)


@cli.command()
@click.argument("snapshots", type=click.Path(dir_okay=False))
@click.option("--config", type=click.Path(dir_okay=False), help="JSON analyze config.")
@click.option("--hamiltonian", type=click.Path(dir_okay=False), help="JSON file with H(t): base and drives.")
@click.option("--scenario", help="Use the Hamiltonian of a built-in scenario.")
@click.option("--beta", type=float, help="Inverse temperature.")
@click.option("--omega0", type=float)
@click.option("--ramp-rate", type=float)
@click.option("--convention", type=click.Choice(["sz", "sz-half"]))
@click.option("--regularize-delta", type=float)
@click.option("--tolerance", "tolerance", multiple=True, help="Override a tolerance, name=value.")
@click.option("--out-csv")
@click.option("--out-json")
def analyze(snapshots: str, config: Optional[str], hamiltonian: Optional[str], **flags):
    """Analyze density-matrix snapshots with finite-difference derivatives."""

    def action() -> int:
        overrides = _overrides(snapshots=snapshots, **flags)
        if hamiltonian:
            overrides["hamiltonian"] = read_json_document(hamiltonian)
        cfg = load_config(config, AnalyzeConfig, overrides)
        result = AnalysisService().analyze(cfg)
        summary = ReportService().write(result, cfg.out_csv, cfg.out_json)
        console.print(f"Wrote {summary.outputs['csv']} ({summary.points} rows) and {summary.outputs['json']}")
        return 0

    _execute("analyze", action)


@cli.command()
@click.option("--config", type=click.Path(dir_okay=False), help="JSON run config.")
@run_options
def audit(config: Optional[str], **flags):
    """Run only the identity and bound checks and print the table."""

    def action() -> int:
        cfg = load_config(config, RunConfig, _overrides(**flags))
        result = AnalysisService().run(cfg)
        ReportService(console=console).print_audit(result.audit)
        if not result.audit.passed:
            raise AuditFailure("Audit failed", {"failures": result.audit.failures()})
        return 0

    _execute("audit", action)


@cli.command("list-scenarios")
@click.option("--beta", type=float, default=1.0, show_default=True)
@click.option("--convention", type=click.Choice(["sz", "sz-half"]), default="sz", show_default=True)
def list_scenarios(beta: float, convention: str):
    """Show the built-in scenarios."""

    def action() -> int:
        table = Table(title="Built-in scenarios")
        for column in ("Name", "gamma", "omega0", "Window", "Analysis start", "Oracles", "Bound regime"):
            table.add_column(column)
        for s in catalog(beta=beta, convention=convention):
            oracles = ", ".join(k for k, v in s.oracles.as_dict().items() if v) or "none"
            table.add_row(
                s.name, f"{s.gamma:g}", f"{s.omega0:g}", f"[{s.t0:g}, {s.tf:g}]",
                "t0" if s.analysis_start is None else f"{s.analysis_start:g}",
                oracles, s.applicability,
            )
        console.print(table)
        return 0

    _execute("list-scenarios", action)


def main(argv: Optional[List[str]] = None) -> None:
    cli.main(args=argv, prog_name="trajthermo")


if __name__ == "__main__":
    main()
