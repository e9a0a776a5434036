import asyncio
import sqlite3

import pytest

from config import RunConfig, SchemaVersion, Verdict
from database import DatabaseConnection
from errors import DomainError, RunNotFoundError, StoreError
from verify import Check, ExperimentReport


def _report(name, estimate):
    return ExperimentReport.from_checks(name, f"{name} claim", 42, 100, [Check("mean", estimate, 1.0, 0.1)])


@pytest.fixture
def reports():
    return [_report("glt_single", 1.0), _report("bougerol", 1.05), _report("h5", 3.0)]


class TestDatabase:
    def test_schema_version_is_recorded(self, tmp_path):
        db = DatabaseConnection(tmp_path / "runs.db")
        row = db.fetch_one("SELECT version FROM schema_version")
        assert row["version"] == SchemaVersion.CURRENT

    def test_newer_schema_is_refused(self, tmp_path):
        path = tmp_path / "runs.db"
        DatabaseConnection(path)
        with sqlite3.connect(path) as conn:
            conn.execute("UPDATE schema_version SET version = ?", (SchemaVersion.CURRENT + 1,))
        with pytest.raises(StoreError):
            DatabaseConnection(path)

    def test_bad_sql_is_a_store_error(self, tmp_path):
        db = DatabaseConnection(tmp_path / "runs.db")
        with pytest.raises(StoreError):
            db.fetch_all("SELECT * FROM missing_table")


class TestReportStore:
    def test_record_and_load(self, store, reports):
        run_id = asyncio.run(store.record_run("verify", RunConfig(seed=42), reports))
        run = asyncio.run(store.get_run_by_id(run_id))
        assert run["command"] == "verify"
        assert run["seed"] == 42
        assert (run["passed"], run["failed"], run["total"]) == (2, 1, 3)
        assert run["config"]["seed"] == 42

        rows = asyncio.run(store.load_reports(run_id))
        assert [row["name"] for row in rows] == ["bougerol", "glt_single", "h5"]
        assert rows[2]["verdict"] == "fail"
        assert rows[0]["payload"]["claim"] == "bougerol claim"

    def test_reports_round_trip(self, store, reports):
        run_id = asyncio.run(store.record_run("verify", RunConfig(), reports))
        restored = asyncio.run(store.load_experiment_reports(run_id))
        assert [report.name for report in restored] == ["bougerol", "glt_single", "h5"]
        assert restored[0].estimate == 1.05
        assert restored[2].verdict == Verdict.FAIL

    def test_runs_newest_first(self, store, reports):
        first = asyncio.run(store.record_run("verify", RunConfig(), reports))
        second = asyncio.run(store.record_run("report", RunConfig(), reports[:1]))
        assert [run["id"] for run in asyncio.run(store.load_runs())] == [second, first]

    def test_missing_run(self, store):
        with pytest.raises(RunNotFoundError):
            asyncio.run(store.get_run_by_id(99))
        with pytest.raises(RunNotFoundError):
            asyncio.run(store.load_reports(99))

    def test_delete_cascades(self, store, reports):
        run_id = asyncio.run(store.record_run("verify", RunConfig(), reports))
        assert asyncio.run(store.delete_run(run_id))
        assert not asyncio.run(store.delete_run(run_id))
        assert asyncio.run(store.search_reports()) == []

    def test_search(self, store, reports):
        asyncio.run(store.record_run("verify", RunConfig(), reports))
        assert [row["name"] for row in asyncio.run(store.search_reports("glt"))] == ["glt_single"]
        assert [row["name"] for row in asyncio.run(store.search_reports(verdict="FAIL"))] == ["h5"]
        assert len(asyncio.run(store.search_reports(verdict=Verdict.PASS))) == 2
        with pytest.raises(DomainError):
            asyncio.run(store.search_reports(verdict="maybe"))

    def test_search_within_a_run(self, store, reports):
        first = asyncio.run(store.record_run("verify", RunConfig(), reports))
        asyncio.run(store.record_run("verify", RunConfig(), reports))
        rows = asyncio.run(store.search_reports(verdict=[Verdict.FAIL, "inconclusive"], run_id=first))
        assert [(row["run_id"], row["name"]) for row in rows] == [(first, "h5")]
        assert len(asyncio.run(store.search_reports(verdict=[Verdict.FAIL]))) == 2
