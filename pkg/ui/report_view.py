"""Detail pane for one experiment report."""

import json
from typing import Optional

from rich.table import Table
from textual.app import ComposeResult
from textual.containers import VerticalScroll
from textual.widgets import Label, Static

from .report_types import ReportData, check_rows


class ReportView(VerticalScroll):
    """Claim, checks and details of the highlighted report."""

    def __init__(self):
        super().__init__(id="report-view")
        self.border_title = "Report"
        self.report: Optional[ReportData] = None

    def compose(self) -> ComposeResult:
        yield Label("", id="report-claim")
        yield Static("", id="report-checks")
        yield Static("", id="report-details")
        yield Label("[dim]Tip: 'd' deletes the selected run, 'f' shows only failures[/]", id="report-help")

    def update_report(self, report: Optional[ReportData]) -> None:
        """Show a report, or clear the pane for None."""
        self.report = report
        claim = self.query_one("#report-claim", Label)
        checks = self.query_one("#report-checks", Static)
        details = self.query_one("#report-details", Static)

        if report is None:
            claim.update("")
            checks.update("")
            details.update("")
            self.border_title = "[dim]No report selected[/]"
            return

        payload = report.get("payload", {})
        self.border_title = f"[bold]{report['name']}[/] ({report['verdict']}, {report['runtime']:.1f}s)"
        reason = payload.get("reason")
        claim.update(payload.get("claim", "") + (f"\n[yellow]{reason}[/]" if reason else ""))

        table = Table(expand=True)
        for column in ("Check", "Estimate", "Target", "Tolerance", "Result"):
            table.add_column(column)
        for row in check_rows(report):
            table.add_row(
                row["label"],
                str(row.get("estimate")),
                str(row.get("target")),
                f"{row.get('tolerance')} ({row['kind']})",
                "[green]ok[/]" if row.get("passed") else "[bold red]miss[/]",
            )
        checks.update(table)
        details.update(json.dumps(payload.get("details", {}), sort_keys=True, indent=2))
