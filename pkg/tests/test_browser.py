import asyncio

from browser import ReportBrowser
from config import RunConfig
from ui import DeleteConfirmDialog, ReportTable, ReportView, RunList
from verify import Check, ExperimentReport


def _report(name, estimate):
    return ExperimentReport.from_checks(name, f"{name} claim", 42, 100, [Check("mean", estimate, 1.0, 0.1)])


def _seed_runs(store):
    first = asyncio.run(store.record_run("verify", RunConfig(seed=1), [_report("h5", 1.0)]))
    second = asyncio.run(
        store.record_run("verify", RunConfig(seed=2), [_report("bougerol", 1.0), _report("glt_single", 4.0)])
    )
    return first, second


class TestReportBrowser:
    def test_shows_newest_run(self, store):
        _, newest = _seed_runs(store)

        async def scenario():
            app = ReportBrowser(store)
            async with app.run_test() as pilot:
                await pilot.pause()
                assert [run["id"] for run in app.query_one(RunList).runs][0] == newest
                assert [report["name"] for report in app.query_one(ReportTable).reports] == ["bougerol", "glt_single"]
                assert app.query_one(ReportView).report["name"] == "bougerol"

        asyncio.run(scenario())

    def test_failures_filter(self, store):
        _seed_runs(store)

        async def scenario():
            app = ReportBrowser(store)
            async with app.run_test() as pilot:
                await pilot.press("f")
                await pilot.pause()
                assert [report["name"] for report in app.query_one(ReportTable).reports] == ["glt_single"]
                await pilot.press("f")
                await pilot.pause()
                assert len(app.query_one(ReportTable).reports) == 2

        asyncio.run(scenario())

    def test_delete_run(self, store):
        oldest, newest = _seed_runs(store)

        async def scenario():
            app = ReportBrowser(store)
            async with app.run_test() as pilot:
                await pilot.pause()
                await pilot.press("d")
                await pilot.pause()
                assert isinstance(app.screen, DeleteConfirmDialog)
                await pilot.click("#delete-button")
                await pilot.pause()
                await pilot.pause()
                assert [run["id"] for run in app.runs] == [oldest]

        asyncio.run(scenario())
        assert [run["id"] for run in asyncio.run(store.load_runs())] == [oldest]

    def test_keep_run(self, store):
        _seed_runs(store)

        async def scenario():
            app = ReportBrowser(store)
            async with app.run_test() as pilot:
                await pilot.pause()
                await pilot.press("d")
                await pilot.pause()
                await pilot.press("n")
                await pilot.pause()
                assert not isinstance(app.screen, DeleteConfirmDialog)
                assert len(app.runs) == 2

        asyncio.run(scenario())
        assert len(asyncio.run(store.load_runs())) == 2

    def test_empty_store(self, store):
        async def scenario():
            app = ReportBrowser(store)
            async with app.run_test() as pilot:
                await pilot.press("d")
                await pilot.pause()
                assert app.current_run is None
                assert not isinstance(app.screen, DeleteConfirmDialog)

        asyncio.run(scenario())
