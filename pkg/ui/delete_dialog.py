"""Confirmation screen shown before a stored run is deleted."""

from textual import on
from textual.app import ComposeResult
from textual.binding import Binding
from textual.containers import Grid, Horizontal
from textual.screen import ModalScreen
from textual.widgets import Button, Label, Static

from .report_types import RunData


class DeleteConfirmDialog(ModalScreen[bool]):
    """Asks whether to delete a run; dismisses with True when confirmed."""

    BINDINGS = [
        Binding("y", "answer(True)", "Delete"),
        Binding("n,escape", "answer(False)", "Keep"),
    ]

    def __init__(self, run: RunData):
        super().__init__()
        self.run = run

    def compose(self) -> ComposeResult:
        run = self.run
        with Grid(id="delete-dialog"):
            yield Label(f"Delete run {run['id']} and its {run['total']} reports?", id="delete-message")
            yield Static("command", classes="field")
            yield Static(run["command"])
            yield Static("seed", classes="field")
            yield Static(str(run["seed"]))
            yield Static("pass / fail / inconclusive", classes="field")
            yield Static(f"{run['passed']} / {run['failed']} / {run['inconclusive']}")
            yield Static("created", classes="field")
            yield Static(run["created_at"][:19])
            with Horizontal(classes="dialog-buttons"):
                yield Button("Keep", id="cancel-button", variant="primary")
                yield Button("Delete", id="delete-button", variant="error")

    def action_answer(self, confirmed: bool) -> None:
        self.dismiss(confirmed)

    @on(Button.Pressed)
    def on_button(self, event: Button.Pressed) -> None:
        self.dismiss(event.button.id == "delete-button")
