"""UI components for the run browser."""

from .delete_dialog import DeleteConfirmDialog
from .report_table import ReportTable
from .report_types import ReportData, RunData
from .report_view import ReportView
from .run_list import RunList

__all__ = [
    "RunData",
    "ReportData",
    "RunList",
    "ReportTable",
    "ReportView",
    "DeleteConfirmDialog",
]
