import math

import numpy as np
import pytest
from scipy import stats

import analytic
import samplers
from errors import DegenerateWeightsError, DomainError, NonIntegerOrderError
from samplers import RngStream, YorParams
from tests.conftest import assert_within_se


class TestStreams:
    def test_same_pair_same_sequence(self):
        a = RngStream(7, 3).generator().random(5)
        b = RngStream(7, 3).generator().random(5)
        np.testing.assert_array_equal(a, b)

    def test_distinct_ids_differ(self):
        a = RngStream(7, 3).generator().random(5)
        b = RngStream(7, 4).generator().random(5)
        assert not np.array_equal(a, b)

    def test_substreams_are_stable_and_distinct(self):
        parent = RngStream(11)
        assert parent.substream(2) == parent.substream(2)
        assert parent.substream(2) != parent.substream(3)
        assert parent.substream(2).seed == 11

    @pytest.mark.parametrize("seed", [-1, 2**64])
    def test_out_of_range_seed(self, seed):
        with pytest.raises(DomainError):
            RngStream(seed)

    def test_chunk_sizes(self):
        chunks = samplers.chunk_streams(RngStream(1), 4500)
        assert [size for _, size in chunks] == [2000, 2000, 500]
        assert len({stream for stream, _ in chunks}) == 3

    def test_chunking_needs_draws(self):
        with pytest.raises(DomainError):
            samplers.chunk_streams(RngStream(1), 0)


class TestBasicLaws:
    def test_scalar_and_array(self, rng):
        assert isinstance(samplers.sample_basic("normal", rng), float)
        assert samplers.sample_basic("exponential", rng, size=(3, 2)).shape == (3, 2)

    def test_exponential_rate(self, rng):
        assert_within_se(samplers.sample_basic("exponential", rng, 20000, rate=4.0), 0.25)

    def test_gamma_half_mean(self, rng):
        assert_within_se(samplers.sample_basic("gamma_half", rng, 20000), 0.5)

    def test_cauchy_law(self, rng):
        draws = samplers.sample_basic("cauchy", rng, 5000, c=2.0)
        assert stats.kstest(draws, stats.cauchy(scale=2.0).cdf).pvalue > 1e-3

    @pytest.mark.parametrize(
        "kind, params",
        [("exponential", {"rate": 0.0}), ("uniform", {"low": 1.0, "high": 1.0}), ("poisson", {})],
    )
    def test_bad_parameters(self, rng, kind, params):
        with pytest.raises(DomainError):
            samplers.sample_basic(kind, rng, 3, **params)


class TestGgcSampling:
    def test_order_two_transform(self, rng):
        draws = samplers.sample_K(analytic.ggc_coeffs(2), rng, 40000)
        assert_within_se(np.exp(-draws), 1 / 3)

    def test_order_one_transform(self, rng):
        draws = samplers.sample_K(analytic.ggc_coeffs(1), rng, 40000)
        assert_within_se(np.exp(-draws), 1 / math.sqrt(2))

    def test_order_three_mean(self, rng):
        assert_within_se(samplers.sample_K(analytic.ggc_coeffs(3), rng, 40000), 4.5)

    def test_x2c_at_quarter_pi(self, rng):
        draws = samplers.sample_X2c(math.pi / 4, rng, 40000)
        assert_within_se(np.exp(-draws), 0.235702)

    def test_x2c_rejects_non_integer_order(self, rng):
        with pytest.raises(NonIntegerOrderError):
            samplers.sample_X2c(1.0, rng, 10)

    def test_integer_order(self):
        assert samplers.integer_order(math.pi / 6) == 3


class TestFirstPassage:
    def test_median(self, rng):
        draws = samplers.sample_first_passage(1.0, rng, 40000)
        assert np.median(draws) == pytest.approx(2.198109, rel=0.02)

    def test_probability_before_one(self, rng):
        draws = samplers.sample_first_passage(1.0, rng, 40000)
        assert_within_se(draws <= 1.0, 0.317311)

    def test_scaling_in_level(self, rng):
        draws = samplers.sample_first_passage(2.0, rng, 20000)
        assert stats.kstest(draws, lambda u: analytic.first_passage_cdf(2.0, u)).pvalue > 1e-3


class TestYor:
    def test_unit_rate_parameters(self):
        p = YorParams.from_rate(2.0)
        assert p.a == pytest.approx(1.0)
        assert p.b == pytest.approx(1.0)

    def test_drift_shifts_b(self):
        p = YorParams.from_rate(1.5, nu=0.5)
        assert p.a - p.b == pytest.approx(0.5)

    def test_inconsistent_parameters(self):
        with pytest.raises(DomainError):
            YorParams(lam=2.0, nu=0.0, a=1.0, b=2.0)

    def test_rhs_mean_for_unit_parameters(self, rng):
        # a = b = 1: E[(1 - U)] E[1/(2 G_1)] diverges, so compare a bounded transform
        draws = samplers.sample_yor_rhs(YorParams.from_rate(2.0), rng, 20000)
        assert np.all(draws > 0)
        u = rng.random(200000)
        g = rng.standard_gamma(1.0, 200000)
        reference = np.mean(np.exp(-(1 - u) / (2 * g)))
        assert_within_se(np.exp(-draws), reference, bias=0.005)


class TestBiasedExpectation:
    def test_no_bias_is_plain_mean(self, rng):
        x = rng.random(1000)
        estimate = samplers.biased_expectation(x, 0.0)
        assert estimate.mean == pytest.approx(x.mean())
        assert estimate.ess == pytest.approx(1000)

    def test_constant_payoff(self, rng):
        estimate = samplers.biased_expectation(rng.random(500) + 0.1, 2.0, payoff=lambda x: np.ones_like(x))
        assert estimate.mean == pytest.approx(1.0)
        assert estimate.stderr == pytest.approx(0.0, abs=1e-12)

    def test_size_biased_exponential(self, rng):
        # x e^{-x} dx is Gamma(2), whose mean is 2
        estimate = samplers.biased_expectation(rng.standard_exponential(100000), 1.0)
        assert abs(estimate.mean - 2.0) <= 4 * estimate.stderr
        assert 100 < estimate.ess < 100000

    def test_all_zero_samples(self):
        with pytest.raises(DegenerateWeightsError):
            samplers.biased_expectation(np.zeros(10), 1.0)

    def test_negative_samples(self):
        with pytest.raises(DomainError):
            samplers.biased_expectation([1.0, -1.0], 1.0)


class TestSubordinator:
    @pytest.mark.parametrize("lam, expected", [(1.0, math.exp(-1.0)), (4.0, math.exp(-2.0))])
    def test_half_stable_transform(self, rng, lam, expected):
        draws = samplers.sample_stable_subordinator_increment(0.5, 1.0, rng, 40000)
        assert_within_se(np.exp(-lam * draws), expected)

    def test_scaling_in_dt(self, rng):
        draws = samplers.sample_stable_subordinator_increment(0.75, 0.5, rng, 40000)
        assert_within_se(np.exp(-draws), math.exp(-0.5))

    @pytest.mark.parametrize("alpha_half", [0.0, 1.0])
    def test_index_range(self, rng, alpha_half):
        with pytest.raises(DomainError):
            samplers.sample_stable_subordinator_increment(alpha_half, 1.0, rng)
