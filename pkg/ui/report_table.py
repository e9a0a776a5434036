"""Reports of the selected run."""

from typing import List, Optional

from rich.text import Text
from textual import on
from textual.app import ComposeResult
from textual.containers import Container
from textual.message import Message
from textual.widgets import DataTable

from .report_types import ReportData

VERDICT_STYLES = {"pass": "green", "fail": "bold red", "inconclusive": "yellow"}


def _cell(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.6g}"


class ReportTable(Container):
    class Selected(Message):
        """Message sent when the cursor moves to a report."""

        def __init__(self, report: ReportData):
            super().__init__()
            self.report = report

    def __init__(self):
        super().__init__(id="report-list")
        self.border_title = "Reports"
        self.reports: List[ReportData] = []

    def compose(self) -> ComposeResult:
        table = DataTable(id="report-table", cursor_type="row", zebra_stripes=True, header_height=1)
        table.add_columns("Experiment", "Verdict", "Estimate", "Target", "Tolerance", "n")
        yield table

    def update_table(self, reports: List[ReportData], title: str = "Reports") -> None:
        self.reports = reports
        self.border_title = title
        table = self.query_one(DataTable)
        table.clear()
        for report in reports:
            verdict = Text(report["verdict"], style=VERDICT_STYLES.get(report["verdict"], ""))
            table.add_row(
                report["name"],
                verdict,
                _cell(report["estimate"]),
                _cell(report["target"]),
                _cell(report["tolerance"]),
                str(report["n"]),
                key=str(report["id"]),
            )

    def get_selected_report(self) -> Optional[ReportData]:
        table = self.query_one(DataTable)
        if table.cursor_row is not None and table.cursor_row < len(self.reports):
            return self.reports[table.cursor_row]
        return None

    @on(DataTable.RowHighlighted)
    def on_row_highlighted(self, event: DataTable.RowHighlighted) -> None:
        event.stop()
        report = self.get_selected_report()
        if report is not None:
            self.post_message(self.Selected(report))
