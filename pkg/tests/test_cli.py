import asyncio
import csv
import json

import pytest

from config import CONSTANTS_NAME, PRICE_NAME, REPORTS_NAME, SIMULATE_NAME, SUMMARY_NAME, ExitStatus
from database import DatabaseConnection
from main import main, merge_report_files
from models import ReportStore
from verify import Check, ExperimentReport


def _rows(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def _runs(out):
    return asyncio.run(ReportStore(DatabaseConnection(out / "runs.db")).load_runs())


class TestConstants:
    def test_table(self, tmp_path):
        assert main(["constants", "--alpha", "1.0", "1.5", "--out", str(tmp_path)]) == ExitStatus.OK
        rows = _rows(tmp_path / CONSTANTS_NAME)
        assert [row["alpha"] for row in rows] == ["1", "1.5"]
        assert float(rows[0]["ratio"]) == pytest.approx(1.0, abs=1e-5)
        assert float.fromhex(rows[1]["k_alpha_hex"]) > 0

    def test_alpha_out_of_range(self, tmp_path):
        assert main(["constants", "--alpha", "2.5", "--out", str(tmp_path)]) == ExitStatus.USAGE


class TestPrice:
    ARGS = ["price", "--t", "1", "--strike", "0", "1", "--paths", "400", "--dt", "0.01"]

    def test_grid_is_reproducible(self, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        assert main(self.ARGS + ["--out", str(first)]) == ExitStatus.OK
        assert main(self.ARGS + ["--out", str(second)]) == ExitStatus.OK
        assert (first / PRICE_NAME).read_bytes() == (second / PRICE_NAME).read_bytes()
        rows = _rows(first / PRICE_NAME)
        assert len(rows) == 2
        assert float(rows[0]["price"]) >= float(rows[1]["price"])
        assert rows[0]["n_paths"] == "400"

    def test_negative_strike(self, tmp_path):
        assert main(["price", "--strike", "-1", "--paths", "10", "--out", str(tmp_path)]) == ExitStatus.USAGE


class TestVerify:
    ARGS = ["verify", "--suite", "asian_k0", "--paths", "2000", "--dt", "0.01", "--seed", "3"]

    def test_reports_are_byte_identical(self, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        code = main(self.ARGS + ["--out", str(first)])
        assert code in (ExitStatus.OK, ExitStatus.FAILED)
        assert main(self.ARGS + ["--out", str(second)]) == code
        assert (first / REPORTS_NAME).read_bytes() == (second / REPORTS_NAME).read_bytes()
        payload = json.loads((first / REPORTS_NAME).read_text())
        assert [entry["name"] for entry in payload] == ["asian_k0"]
        assert payload[0]["seed"] == 3

    def test_run_is_stored(self, tmp_path):
        main(self.ARGS + ["--out", str(tmp_path)])
        runs = _runs(tmp_path)
        assert len(runs) == 1
        assert runs[0]["command"] == "verify"
        assert runs[0]["total"] == 1

    def test_unknown_suite(self, tmp_path):
        assert main(["verify", "--suite", "nonexistent", "--out", str(tmp_path)]) == ExitStatus.USAGE

    def test_bad_override(self, tmp_path):
        assert main(["verify", "--set", "t", "--out", str(tmp_path)]) == ExitStatus.USAGE

    def test_bad_config_file(self, tmp_path):
        config = tmp_path / "run.conf"
        config.write_text("colour = red\n")
        assert main(["verify", "--config", str(config), "--out", str(tmp_path)]) == ExitStatus.USAGE

    def test_unknown_command(self):
        with pytest.raises(SystemExit) as info:
            main(["fly"])
        assert info.value.code == 2


class TestReport:
    def _write(self, path, name, estimate, target):
        report = ExperimentReport.from_checks(name, "claim", 1, 10, [Check("mean", estimate, target, 0.1)])
        path.write_text(json.dumps([report.to_payload()]))

    def test_later_file_wins(self, tmp_path):
        first, second = tmp_path / "first.json", tmp_path / "second.json"
        self._write(first, "h5", 5.0, 1.0)
        self._write(second, "h5", 1.0, 1.0)
        reports = merge_report_files([first, second])
        assert len(reports) == 1
        assert reports[0].estimate == 1.0

    def test_summary(self, tmp_path):
        first, second = tmp_path / "first.json", tmp_path / "second.json"
        self._write(first, "h5", 1.0, 1.0)
        self._write(second, "bougerol", 5.0, 1.0)
        out = tmp_path / "out"
        assert main(["report", str(first), str(second), "--out", str(out)]) == ExitStatus.FAILED
        summary = json.loads((out / SUMMARY_NAME).read_text())
        assert summary["summary"]["total"] == 2
        assert summary["summary"]["fail"] == 1
        assert [entry["name"] for entry in summary["reports"]] == ["bougerol", "h5"]

    def test_missing_file(self, tmp_path):
        assert main(["report", str(tmp_path / "absent.json"), "--out", str(tmp_path)]) == ExitStatus.IO_ERROR

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps([{"name": "h5"}]))
        assert main(["report", str(path), "--out", str(tmp_path)]) == ExitStatus.IO_ERROR

    def test_stored_run_is_a_source(self, tmp_path):
        out = tmp_path / "runs"
        main(TestVerify.ARGS + ["--out", str(out)])
        merged = tmp_path / "merged"
        code = main(["report", "--run", "1", "--db", str(out / "runs.db"), "--out", str(merged)])
        assert code in (ExitStatus.OK, ExitStatus.FAILED)
        summary = json.loads((merged / SUMMARY_NAME).read_text())
        assert summary["sources"] == ["run:1"]
        assert [entry["name"] for entry in summary["reports"]] == ["asian_k0"]
        verified = json.loads((out / REPORTS_NAME).read_text())
        assert summary["reports"][0]["verdict"] == verified[0]["verdict"]
        assert summary["reports"][0]["estimate_hex"] == verified[0]["estimate_hex"]

    def test_no_sources(self, tmp_path):
        assert main(["report", "--out", str(tmp_path)]) == ExitStatus.USAGE

    def test_unknown_run(self, tmp_path):
        assert main(["report", "--run", "5", "--out", str(tmp_path)]) == ExitStatus.IO_ERROR


class TestSimulate:
    def test_brownian(self, tmp_path):
        args = ["simulate", "--t", "1", "--paths", "50", "--dt", "0.01", "--out", str(tmp_path)]
        assert main(args) == ExitStatus.OK
        rows = _rows(tmp_path / SIMULATE_NAME)
        assert len(rows) == 50
        assert {row["process"] for row in rows} == {"bm"}
        assert all(row["status"] == "ok" for row in rows)

    def test_stable(self, tmp_path):
        args = ["simulate", "--process", "stable", "--alpha", "1.5", "--t", "0.5", "--paths", "20", "--dt", "0.01"]
        assert main(args + ["--out", str(tmp_path)]) == ExitStatus.OK
        rows = _rows(tmp_path / SIMULATE_NAME)
        assert len(rows) == 20
        assert {row["alpha"] for row in rows} == {"1.5"}
        ok = [row for row in rows if row["status"] == "ok"]
        assert all(float(row["clock"]) == pytest.approx(0.5) for row in ok)

    def test_unknown_process(self, tmp_path):
        with pytest.raises(SystemExit):
            main(["simulate", "--process", "levy", "--out", str(tmp_path)])
