from typing import List, Optional

from textual import on
from textual.app import App, ComposeResult
from textual.containers import Horizontal, Vertical
from textual.widgets import Footer, Header

from config import Verdict
from models import ReportStore
from ui import DeleteConfirmDialog, ReportData, ReportTable, ReportView, RunData, RunList

FAILURE_VERDICTS = (Verdict.FAIL, Verdict.INCONCLUSIVE)


class ReportBrowser(App):
    """Browser for runs stored in the results database."""

    CSS_PATH = "browser.tcss"

    BINDINGS = [
        ("d", "delete_run", "Delete Run"),
        ("f", "toggle_failures", "Failures Only"),
        ("r", "refresh", "Refresh"),
        ("q", "quit", "Quit"),
    ]

    def __init__(self, store: ReportStore):
        super().__init__()
        self.store = store
        self.runs: List[RunData] = []
        self.reports: List[ReportData] = []
        self.failures_only = False
        self.current_run: Optional[RunData] = None

    def compose(self) -> ComposeResult:
        yield Header()
        with Horizontal(id="main"):
            yield RunList()
            with Vertical(id="right"):
                yield ReportTable()
                yield ReportView()
        yield Footer()

    async def on_mount(self) -> None:
        self.title = "Cone windings"
        self.sub_title = "Stored verification runs"
        await self.reload()

    async def reload(self, focus_run_id: Optional[int] = None) -> None:
        """Reload runs from the store and refresh every pane."""
        self.runs = await self.store.load_runs()
        run_list = self.query_one(RunList)
        run_list.update_table(self.runs, focus_run_id)
        if not self.runs:
            self.current_run = None
            await self.show_run(None)
            return
        selected = next((run for run in self.runs if run["id"] == focus_run_id), self.runs[0])
        await self.show_run(selected)
        run_list.focus()

    async def show_run(self, run: Optional[RunData]) -> None:
        self.current_run = run
        report_table = self.query_one(ReportTable)
        if run is None:
            self.reports = []
            report_table.update_table([], "Reports")
            self.query_one(ReportView).update_report(None)
            return
        if self.failures_only:
            reports = await self.store.search_reports(run_id=run["id"], verdict=FAILURE_VERDICTS)
        else:
            reports = await self.store.load_reports(run["id"])
        self.reports = reports
        suffix = " (failures only)" if self.failures_only else ""
        report_table.update_table(reports, f"Run {run['id']}: {run['command']} seed {run['seed']}{suffix}")
        self.query_one(ReportView).update_report(reports[0] if reports else None)

    @on(RunList.Selected)
    async def handle_run_selected(self, event: RunList.Selected) -> None:
        if self.current_run is None or event.run["id"] != self.current_run["id"]:
            await self.show_run(event.run)

    @on(ReportTable.Selected)
    def handle_report_selected(self, event: ReportTable.Selected) -> None:
        self.query_one(ReportView).update_report(event.report)

    async def action_refresh(self) -> None:
        await self.reload(self.current_run["id"] if self.current_run else None)

    async def action_toggle_failures(self) -> None:
        self.failures_only = not self.failures_only
        await self.show_run(self.current_run)

    async def action_delete_run(self) -> None:
        run = self.query_one(RunList).get_selected_run()
        if not run:
            self.notify("No run selected!", timeout=3)
            return

        async def delete_if_confirmed(confirmed: Optional[bool]) -> None:
            if not confirmed:
                return
            if await self.store.delete_run(run["id"]):
                await self.reload()
                self.notify(f"Run {run['id']} deleted", timeout=3)
            else:
                self.notify("Failed to delete run!", severity="error", timeout=3)

        await self.push_screen(DeleteConfirmDialog(run), delete_if_confirmed)
