import math

import numpy as np
import pytest

import experiments
from config import RunConfig, Verdict
from errors import BudgetExhaustedError, UnknownExperimentError
from experiments import REGISTRY, Experiment, ExperimentContext, Outcome, run_experiment, run_suite, select
from samplers import RngStream
from verify import Check

NAMES = {
    "asian_k0",
    "bo_limit",
    "bougerol",
    "deblassie",
    "dufresne",
    "ggc_laplace",
    "glt_double",
    "glt_single",
    "h5",
    "kalpha_variance",
    "propnew",
    "spitzer_bm",
    "stable_asymptotic",
    "x2c_laplace",
    "yor_exptime",
}

FAST = RunConfig(seed=7, n_paths=2000, dt=1e-2)


class TestRegistry:
    def test_names(self):
        assert set(REGISTRY) == NAMES

    def test_every_entry_has_a_claim_and_tags(self):
        for exp in REGISTRY.values():
            assert exp.claim
            assert exp.tags
            assert exp.paths > 0 and exp.dt > 0

    def test_bo_limit_claim_states_its_default_c(self):
        assert "c = 10" in REGISTRY["bo_limit"].claim

    def test_stream_ids_are_distinct(self):
        ids = {experiments.stream_id_for(name) for name in REGISTRY}
        assert len(ids) == len(REGISTRY)
        assert all(0 <= value < 2**64 for value in ids)


class TestSelect:
    def test_empty_and_all_select_everything(self):
        assert [exp.name for exp in select()] == sorted(NAMES)
        assert [exp.name for exp in select(["all"])] == sorted(NAMES)

    def test_by_name_and_tag(self):
        chosen = [exp.name for exp in select(["h5", "stable"])]
        assert chosen == sorted(chosen)
        assert "h5" in chosen
        assert {"kalpha_variance", "stable_asymptotic"} <= set(chosen)

    def test_unknown_filter(self):
        with pytest.raises(UnknownExperimentError):
            select(["nonexistent"])


class TestContext:
    def test_defaults_come_from_the_experiment(self):
        ctx = ExperimentContext(REGISTRY["h5"], RngStream(1), RunConfig())
        assert ctx.n_paths == REGISTRY["h5"].paths
        assert ctx.dt == REGISTRY["h5"].dt

    def test_params_prefer_the_qualified_key(self):
        config = RunConfig(overrides={"b": 2.0, "h5.b": 3.0, "t": 5.0})
        ctx = ExperimentContext(REGISTRY["h5"], RngStream(1), config)
        assert ctx.param("b", 1.0) == 3.0
        assert ctx.param("t", 1.0) == 5.0
        assert ctx.param("c", 1.0) == 1.0

    def test_collect_concatenates_chunks(self):
        ctx = ExperimentContext(REGISTRY["h5"], RngStream(1), RunConfig(n_paths=4500))
        values = ctx.collect(lambda gen, count: gen.random(count))
        assert values.shape == (4500,)
        first, second = ctx.collect(lambda gen, count: (np.zeros(count), np.ones(count)), n=10)
        assert first.shape == second.shape == (10,)

    def test_offsets_give_separate_draws(self):
        ctx = ExperimentContext(REGISTRY["h5"], RngStream(1), RunConfig(n_paths=100))
        a = ctx.collect(lambda gen, count: gen.random(count))
        b = ctx.collect(lambda gen, count: gen.random(count), offset=1)
        assert not np.array_equal(a, b)


class TestRunner:
    def test_unknown_name(self):
        with pytest.raises(UnknownExperimentError):
            run_experiment("nonexistent", FAST)

    def test_same_seed_same_payload(self):
        first = run_experiment("asian_k0", FAST)
        second = run_experiment("asian_k0", FAST)
        assert first.to_payload() == second.to_payload()
        assert first.runtime >= 0

    def test_different_seeds_differ(self):
        first = run_experiment("asian_k0", FAST)
        second = run_experiment("asian_k0", RunConfig(seed=8, n_paths=2000, dt=1e-2))
        assert first.estimate != second.estimate

    def test_parallelism_does_not_change_results(self):
        tags = ["asian_k0", "ggc_laplace"]
        serial = [report.to_payload() for report in run_suite(FAST, tags, parallelism=1)]
        threaded = [report.to_payload() for report in run_suite(FAST, tags, parallelism=2)]
        assert serial == threaded
        assert [payload["name"] for payload in serial] == tags

    def test_budget_makes_the_run_inconclusive(self, monkeypatch):
        def exhausted(ctx):
            raise BudgetExhaustedError("walk did not finish", 10)

        monkeypatch.setitem(REGISTRY, "exhausted", Experiment("exhausted", "never finishes", exhausted, 10, 0.1))
        report = run_experiment("exhausted", FAST)
        assert report.verdict == Verdict.INCONCLUSIVE
        assert report.details == {"budget": 10}
        assert "did not finish" in report.reason

    def test_spitzer_with_tiny_budget_is_inconclusive(self):
        config = RunConfig(seed=7, n_paths=200, overrides={"spitzer_bm.u_budget": 0.05, "spitzer_bm.coarsen_rounds": 0})
        report = run_experiment("spitzer_bm", config)
        assert report.verdict == Verdict.INCONCLUSIVE
        assert report.details["exhausted"] == 200
        assert report.details["undecided"] > 2

    def test_single_path_is_inconclusive(self):
        report = run_experiment("spitzer_bm", RunConfig(seed=7, n_paths=1, overrides={"u_budget": 0.05}))
        assert report.verdict == Verdict.INCONCLUSIVE
        assert report.details == {"retained": 1}

    def test_deblassie_reports_measured_slopes(self):
        report = run_experiment("deblassie", RunConfig(seed=7, n_paths=20000, dt=1e-2))
        details = report.details
        assert len(details["slopes"]) == len(details["log_levels"]) - 1
        assert details["slopes"][0] < 0
        assert isinstance(details["reached_minus_two"], bool)

    def test_failed_check_fails_the_run(self, monkeypatch):
        def wrong(ctx):
            return Outcome([Check("off", 2.0, 1.0, 0.1)], 1)

        monkeypatch.setitem(REGISTRY, "wrong", Experiment("wrong", "always off", wrong, 10, 0.1))
        report = run_experiment("wrong", FAST)
        assert report.verdict == Verdict.FAIL
        assert report.estimate == 2.0


class TestAcceptance:
    @pytest.mark.slow
    def test_asian_k0_passes(self):
        report = run_experiment("asian_k0", RunConfig(seed=42, n_paths=20000))
        assert report.verdict == Verdict.PASS
        prices = report.details["prices"]
        assert report.details["monotone_in_K"]
        assert prices == sorted(prices, reverse=True)
        assert prices[0] == pytest.approx((math.exp(2) - 1) / 2, rel=0.05)

    @pytest.mark.slow
    @pytest.mark.parametrize("name", sorted(NAMES))
    def test_every_experiment_passes_at_its_default_size(self, name):
        report = run_experiment(name, RunConfig(seed=42))
        assert report.verdict == Verdict.PASS, report.reason or report.checks
        assert report.n > 0
