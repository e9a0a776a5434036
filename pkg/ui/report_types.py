"""Shared type definitions for the browser widgets."""

from typing import Any, Dict, List, Optional, TypedDict


class RunData(TypedDict, total=False):
    """A stored run as returned by ReportStore."""

    id: int
    command: str
    seed: int
    created_at: str
    config: Dict[str, Any]
    passed: int
    failed: int
    inconclusive: int
    total: int


class ReportData(TypedDict, total=False):
    """A stored experiment report; `payload` is the reports.json entry."""

    id: int
    run_id: int
    name: str
    verdict: str
    target: Optional[float]
    estimate: Optional[float]
    tolerance: Optional[float]
    n: int
    runtime: float
    payload: Dict[str, Any]


def check_rows(report: ReportData) -> List[Dict[str, Any]]:
    return list(report.get("payload", {}).get("checks", []))
