"""
Report Service
Ledger CSV, JSON summary and the rich audit table.
"""

import json
import time
from pathlib import Path
from typing import Optional

from rich.console import Console
from rich.table import Table

from trajthermo.core.config import Settings, get_settings
from trajthermo.core.logging import get_logger, perf_logger
from trajthermo.models.responses import AuditReport, BoundVerdict, RunSummary
from trajthermo.services.analysis_service import AnalysisResult
from trajthermo.utils.serialization import to_jsonable


logger = get_logger(__name__)

# 17 significant digits
CSV_FLOAT_FORMAT = "%.16e"


class ReportService:
    """Writes the artifacts of an analysis result."""

    def __init__(self, settings: Optional[Settings] = None, console: Optional[Console] = None):
        self.settings = settings or get_settings()
        self.console = console or Console()

    def default_paths(self, name: str):
        out = Path(self.settings.output_dir)
        return out / f"{name}.csv", out / f"{name}.json"

    def summarize(self, result: AnalysisResult) -> RunSummary:
        ledger = result.ledger
        times = ledger.times
        return RunSummary(
            run=result.name,
            points=len(times),
            window=[float(times[0]), float(times[-1])],
            totals=dict(ledger.totals),
            max_residuals=ledger.max_residuals(),
            trace_drift=float(result.trajectory.metadata.get("trace_drift", result.trajectory.trace_drift())),
            closure_error=ledger.closure_error(),
            bound_audit=[BoundVerdict(**b.to_dict()) for b in result.bounds],
            audit=result.audit,
            reference_budget=result.reference_budget,
            spectral_flow={
                "crossings": len(result.flow.crossings),
                "min_overlap": result.flow.min_overlap,
                "permutations": sum(1 for e in result.flow.matching_log if not e["identity"]),
            },
            warnings=result.warnings,
            provenance=result.provenance,
        )

    def write_csv(self, result: AnalysisResult, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        result.ledger.to_frame().to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
        return path

    def write_summary(self, summary: RunSummary, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = to_jsonable(summary.model_dump(mode="json"))
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    def write(self, result: AnalysisResult, out_csv: Optional[str] = None, out_json: Optional[str] = None) -> RunSummary:
        """Write CSV and JSON; returns the summary with output paths filled in."""
        start = time.time()
        default_csv, default_json = self.default_paths(result.name)
        csv_path = self.write_csv(result, Path(out_csv) if out_csv else default_csv)
        summary = self.summarize(result)
        json_path = Path(out_json) if out_json else default_json
        summary.outputs = {"csv": str(csv_path), "json": str(json_path)}
        self.write_summary(summary, json_path)
        perf_logger.log_stage_time("export", time.time() - start, summary.points)
        logger.info("Outputs written", csv=str(csv_path), json=str(json_path))
        return summary

    def render_audit(self, report: AuditReport) -> Table:
        table = Table(title=f"Audit: {report.run}")
        table.add_column("Check", style="cyan")
        table.add_column("Worst value", justify="right")
        table.add_column("Tolerance", justify="right")
        table.add_column("Result")
        table.add_column("Note", style="dim")
        for row in report.rows:
            verdict = "[green]PASS[/green]" if row.passed else "[red]FAIL[/red]"
            table.add_row(row.name, f"{row.value:.3e}", f"{row.tolerance:.1e}", verdict, row.note or "")
        return table

    def print_audit(self, report: AuditReport) -> None:
        self.console.print(self.render_audit(report))
