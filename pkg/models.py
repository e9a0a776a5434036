import json
import logging
import sqlite3
from datetime import datetime
from typing import Dict, List, Optional, Sequence, Union

from config import RunConfig, Verdict
from database import DatabaseConnection
from errors import DomainError, RunNotFoundError, StoreError
from verify import ExperimentReport, summarize

logger = logging.getLogger(__name__)


def config_payload(config: RunConfig) -> Dict:
    """RunConfig as a JSON-ready dict."""
    return {
        "seed": config.seed,
        "n_paths": config.n_paths,
        "dt": config.dt,
        "parallelism": config.parallelism,
        "output_dir": str(config.output_dir),
        "suite": list(config.suite),
        "overrides": dict(config.overrides),
    }


class ReportStore:
    """Handles run- and report-related database operations."""

    def __init__(self, db: DatabaseConnection):
        self.db = db

    @staticmethod
    def _format_run(row: Dict) -> Dict:
        """Format run data from database row to dict."""
        return {
            "id": row["id"],
            "command": row["command"],
            "seed": row["seed"],
            "created_at": row["created_at"],
            "config": json.loads(row["config"]),
            "passed": row["passed"],
            "failed": row["failed"],
            "inconclusive": row["inconclusive"],
            "total": row["passed"] + row["failed"] + row["inconclusive"],
        }

    @staticmethod
    def _format_report(row: Dict) -> Dict:
        return {
            "id": row["id"],
            "run_id": row["run_id"],
            "name": row["name"],
            "verdict": row["verdict"],
            "target": row["target"],
            "estimate": row["estimate"],
            "tolerance": row["tolerance"],
            "n": row["n"],
            "runtime": row["runtime"],
            "payload": json.loads(row["payload"]),
        }

    async def record_run(self, command: str, config: RunConfig, reports: Sequence[ExperimentReport]) -> int:
        """Store a run and its reports in one transaction.

        Args:
            command: CLI command that produced the reports
            config: Effective run configuration
            reports: Reports to store

        Returns:
            ID of the new run

        Raises:
            StoreError: If the database write fails
        """
        counts = summarize(reports)
        try:
            with self.db.get_connection() as conn:
                run_id = conn.execute(
                    """
                    INSERT INTO runs (command, seed, created_at, config, passed, failed, inconclusive)
                    VALUES (?, ?, ?, ?, ?, ?, ?)
                    """,
                    (
                        command,
                        config.seed,
                        datetime.now().isoformat(),
                        json.dumps(config_payload(config), sort_keys=True),
                        counts[Verdict.PASS],
                        counts[Verdict.FAIL],
                        counts[Verdict.INCONCLUSIVE],
                    ),
                ).lastrowid
                for report in reports:
                    conn.execute(
                        """
                        INSERT INTO reports (run_id, name, verdict, target, estimate, tolerance, n, runtime, payload)
                        VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)
                        """,
                        (
                            run_id,
                            report.name,
                            str(report.verdict),
                            report.target,
                            report.estimate,
                            report.tolerance,
                            report.n,
                            report.runtime,
                            json.dumps(report.to_payload(), sort_keys=True),
                        ),
                    )
        except sqlite3.Error as e:
            raise StoreError(f"Failed to record run: {e}")
        if run_id is None:
            raise StoreError("Failed to insert run: no row ID returned")
        logger.info("recorded run %d with %d reports", run_id, len(reports))
        return run_id

    async def load_runs(self) -> List[Dict]:
        """All runs, newest first."""
        rows = self.db.fetch_all("SELECT * FROM runs ORDER BY created_at DESC, id DESC")
        return [self._format_run(row) for row in rows]

    async def get_run_by_id(self, run_id: int) -> Dict:
        """Get a run by ID.

        Raises:
            RunNotFoundError: If run is not found
        """
        run = self.db.fetch_one("SELECT * FROM runs WHERE id = ?", (run_id,))
        if not run:
            raise RunNotFoundError(f"Run with ID {run_id} not found")
        return self._format_run(run)

    async def load_reports(self, run_id: int) -> List[Dict]:
        """Reports of one run, sorted by experiment name.

        Raises:
            RunNotFoundError: If run is not found
        """
        await self.get_run_by_id(run_id)
        rows = self.db.fetch_all("SELECT * FROM reports WHERE run_id = ? ORDER BY name", (run_id,))
        return [self._format_report(row) for row in rows]

    async def load_experiment_reports(self, run_id: int) -> List[ExperimentReport]:
        """Reports of one run rebuilt as ExperimentReport objects."""
        rows = await self.load_reports(run_id)
        try:
            return [ExperimentReport.from_payload(row["payload"], runtime=row["runtime"]) for row in rows]
        except DomainError as e:
            raise StoreError(f"Run {run_id} holds an unreadable report: {e}")

    async def delete_run(self, run_id: int) -> bool:
        """Delete a run and its reports.

        Returns:
            True if the run was deleted, False otherwise
        """
        try:
            await self.get_run_by_id(run_id)
            self.db.execute("DELETE FROM runs WHERE id = ?", (run_id,))
            return True
        except RunNotFoundError:
            return False
        except StoreError as e:
            logger.error("failed to delete run %d: %s", run_id, e)
            return False

    async def search_reports(
        self,
        query: str = "",
        verdict: Optional[Union[Verdict, str, Sequence[Union[Verdict, str]]]] = None,
        run_id: Optional[int] = None,
    ) -> List[Dict]:
        """Search reports across runs.

        Args:
            query: Substring matched against the experiment name
            verdict: One verdict or several (pass/fail/inconclusive or Verdict)
            run_id: Restrict to one run

        Returns:
            Matching reports, newest run first

        Raises:
            DomainError: On an unknown verdict
        """
        conditions = []
        params = []

        if query:
            conditions.append("name LIKE ?")
            params.append(f"%{query}%")

        if verdict is not None:
            wanted = [verdict] if isinstance(verdict, str) else list(verdict)
            try:
                values = [str(Verdict(str(item).lower())) for item in wanted]
            except ValueError:
                raise DomainError(f"Invalid verdict value: {verdict}")
            conditions.append(f"verdict IN ({', '.join('?' for _ in values)})")
            params.extend(values)

        if run_id is not None:
            conditions.append("run_id = ?")
            params.append(run_id)

        where_clause = f"WHERE {' AND '.join(conditions)}" if conditions else ""
        rows = self.db.fetch_all(f"SELECT * FROM reports {where_clause} ORDER BY run_id DESC, name", tuple(params))
        return [self._format_report(row) for row in rows]
