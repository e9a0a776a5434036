"""Run list widget implementation using DataTable."""

from typing import List, Optional

from rich.text import Text
from textual import events, on
from textual.app import ComposeResult
from textual.containers import Container
from textual.css.query import NoMatches
from textual.message import Message
from textual.widgets import DataTable

from .report_types import RunData


class RunList(Container):
    """Stored runs, newest first."""

    class Selected(Message):
        """Message sent when the cursor moves to a run."""

        def __init__(self, run: RunData):
            super().__init__()
            self.run = run

    def __init__(self):
        super().__init__(id="run-list")
        self.border_title = "Runs"
        self.runs: List[RunData] = []

    def compose(self) -> ComposeResult:
        table = DataTable(id="run-table", cursor_type="row", zebra_stripes=True, header_height=1)
        table.add_columns("ID", "Command", "Seed", "Created", "Result")
        yield table

    def update_table(self, runs: List[RunData], focus_run_id: Optional[int] = None) -> None:
        """Repopulate the table.

        Args:
            runs: Runs to show
            focus_run_id: Run to put the cursor on, if present
        """
        self.runs = runs
        table = self.query_one(DataTable)
        table.clear()
        for run in runs:
            if run["failed"]:
                result = Text(f"{run['failed']} failed", style="bold red")
            elif run["inconclusive"]:
                result = Text(f"{run['inconclusive']} inconclusive", style="yellow")
            else:
                result = Text(f"{run['passed']}/{run['total']} passed", style="green")
            cells = (str(run["id"]), run["command"], str(run["seed"]), run["created_at"][:19], result)
            table.add_row(*cells, key=str(run["id"]))

        if focus_run_id is not None:
            try:
                table.cursor_coordinate = (table.get_row_index(str(focus_run_id)), 0)
            except (NoMatches, KeyError):
                pass

    def get_selected_run(self) -> Optional[RunData]:
        table = self.query_one(DataTable)
        if table.cursor_row is not None and table.cursor_row < len(self.runs):
            return self.runs[table.cursor_row]
        return None

    @on(DataTable.RowHighlighted)
    def on_row_highlighted(self, event: DataTable.RowHighlighted) -> None:
        event.stop()
        run = self.get_selected_run()
        if run is not None:
            self.post_message(self.Selected(run))

    def on_focus(self, event: events.Focus) -> None:
        self.border_title = "[bold]Runs[/]"

    def on_blur(self, event: events.Blur) -> None:
        self.border_title = "Runs"

    def focus(self, scroll_visible: bool = True) -> None:
        try:
            self.query_one(DataTable).focus(scroll_visible)
            self.border_title = "[bold]Runs[/]"
        except NoMatches:
            pass
