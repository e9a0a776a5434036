import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

import analytic
from errors import DomainError


class TestPhi:
    @pytest.mark.parametrize(
        "x, expected",
        [(0.0, 0.0), (1.0, 0.776819), (0.5625, 0.480453)],
    )
    def test_values(self, x, expected):
        assert analytic.phi(x) == pytest.approx(expected, abs=1e-6)

    def test_large_argument_is_finite(self):
        assert math.isfinite(analytic.phi(1e300))

    def test_array_in_array_out(self):
        values = analytic.phi(np.array([0.0, 1.0]))
        assert isinstance(values, np.ndarray)
        assert values.shape == (2,)

    def test_negative_raises(self):
        with pytest.raises(DomainError):
            analytic.phi(-1.0)

    def test_derivative(self):
        assert analytic.phi_derivative(1.0) == pytest.approx(0.623225, abs=1e-6)
        assert analytic.phi_derivative(0.0) == 1.0
        h = 1e-6
        numeric = (analytic.phi(2.0 + h) - analytic.phi(2.0 - h)) / (2 * h)
        assert analytic.phi_derivative(2.0) == pytest.approx(numeric, rel=1e-7)


class TestFm:
    def test_order_one(self):
        x = np.linspace(0, 50, 11)
        assert_allclose(analytic.f_m(x, 1), 1 / np.sqrt(1 + x), rtol=1e-13)

    def test_order_two_at_one(self):
        assert analytic.f_m(1.0, 2) == pytest.approx(1 / 3, rel=1e-14)

    @pytest.mark.parametrize("m", [0.5, 1, 3, 7.5])
    def test_zero_gives_one(self, m):
        assert analytic.f_m(0.0, m) == 1.0

    def test_matches_cosh_form(self):
        x = np.geomspace(1e-6, 1e6, 25)
        for m in (1, 2, 5):
            assert_allclose(analytic.f_m(x, m), analytic.f_m_cosh(x, m), rtol=1e-12)

    def test_no_overflow(self):
        value = analytic.f_m(1e300, 10)
        assert value == 0.0 or (math.isfinite(value) and value > 0)


class TestCoshProduct:
    def test_zero(self):
        assert analytic.cosh_product(0.0) == 1.0

    def test_two_hundred_terms(self):
        assert analytic.cosh_product(1.0, 200) == pytest.approx(math.cosh(1.0), abs=1e-3)

    def test_open_ended_rule(self):
        assert analytic.cosh_product(1.0) == pytest.approx(math.cosh(1.0), abs=1e-4)

    def test_nodes(self):
        assert_allclose(analytic.cosh_product_nodes(2), [(math.pi / 2) ** 2, (3 * math.pi / 2) ** 2])


class TestTransforms:
    def test_psi_values(self):
        assert analytic.psi(0.0, "one", c=1.0) == 0.0
        assert analytic.psi(1.0, "one", c=1.0) == pytest.approx(math.log(1.776819), abs=1e-6)
        x = np.array([0.3, 1.0, 8.0])
        assert_allclose(analytic.psi(x, "two", m=2), np.log1p(2 * x), rtol=1e-12)

    @pytest.mark.parametrize(
        "kind, x, kwargs, expected",
        [
            ("single", 0.0, {"c": 3.0}, 1.0),
            ("single", 1.0, {"c": 1.0}, 0.397963),
            ("double", 1.0, {"c": math.pi / 4}, 0.235702),
            ("dufresne", 1.0, {"t": 1.0}, 0.191297),
        ],
    )
    def test_glt_rhs(self, kind, x, kwargs, expected):
        assert analytic.glt_rhs(kind, x, **kwargs) == pytest.approx(expected, abs=1e-5)

    def test_laplace_exponent_matches_rhs(self):
        x = np.linspace(0, 5, 6)
        assert_allclose(np.exp(-analytic.laplace_exponent("single", x, c=0.7)), analytic.glt_rhs("single", x, c=0.7))
        assert_allclose(np.exp(-analytic.laplace_exponent("double", x, c=0.4)), analytic.glt_rhs("double", x, c=0.4))
        assert_allclose(
            np.exp(-analytic.laplace_exponent("dufresne", x, t=2.0)) / math.sqrt(4 * math.pi),
            analytic.glt_rhs("dufresne", x, t=2.0),
        )

    def test_missing_barrier_raises(self):
        with pytest.raises(DomainError):
            analytic.glt_rhs("single", 1.0)

    def test_unknown_kind_raises(self):
        with pytest.raises(DomainError):
            analytic.glt_rhs("triple", 1.0, c=1.0)


class TestDensities:
    @pytest.mark.parametrize(
        "kind, c",
        [("cauchy", 1.0), ("cosh_barrier", math.pi / 2), ("sinh_cauchy", 1.0)],
    )
    def test_peak(self, kind, c):
        assert analytic.densities(kind, 0.0, c) == pytest.approx(1 / math.pi, rel=1e-12)

    @pytest.mark.parametrize("kind", ["cauchy", "sinh_cauchy", "cosh_barrier"])
    @pytest.mark.parametrize("c", [0.5, 2.0])
    def test_unit_mass(self, kind, c):
        assert analytic.density_mass(kind, c) == pytest.approx(1.0, abs=1e-6)


class TestGgc:
    def test_odd_order(self):
        spec = analytic.ggc_coeffs(3)
        assert spec.has_gamma_half
        assert_allclose(spec.coeffs, [0.25])

    def test_even_orders(self):
        assert_allclose(analytic.ggc_coeffs(2).coeffs, [0.5])
        assert not analytic.ggc_coeffs(2).has_gamma_half
        assert_allclose(analytic.ggc_coeffs(4).coeffs, [0.146447, 0.853553], atol=1e-6)

    @pytest.mark.parametrize("m", range(1, 9))
    def test_representation_matches_closed_form(self, m):
        x = np.geomspace(1e-3, 1e3, 30)
        assert_allclose(analytic.ggc_coeffs(m).laplace_transform(x), analytic.f_m(x, m), rtol=1e-10)

    def test_mean(self):
        assert analytic.ggc_coeffs(3).mean() == pytest.approx(4.5)

    @pytest.mark.parametrize("m", [0, 2.5, -1])
    def test_bad_order(self, m):
        with pytest.raises(DomainError):
            analytic.ggc_coeffs(m)

    def test_levy_density(self):
        assert analytic.levy_density(1.0, analytic.ggc_coeffs(2)) == pytest.approx(0.606531, abs=1e-6)
        assert analytic.levy_density(2.0, analytic.ggc_coeffs(3)) == pytest.approx(0.303265, abs=1e-6)
        assert analytic.levy_density(500.0, analytic.ggc_coeffs(4)) < 1e-30

    def test_levy_mass_is_finite(self):
        mass = analytic.levy_mass_check(analytic.ggc_coeffs(5))
        assert 0 < mass < np.inf


class TestFirstPassage:
    def test_cdf(self):
        assert analytic.first_passage_cdf(1.0, 1.0) == pytest.approx(0.317311, abs=1e-6)
        assert analytic.first_passage_cdf(1.0, 1e12) == pytest.approx(1.0, abs=1e-5)

    def test_quantile_inverts_cdf(self):
        for p in (0.1, 0.5, 0.9):
            u = analytic.first_passage_quantile(0.8, p)
            assert analytic.first_passage_cdf(0.8, u) == pytest.approx(p, rel=1e-10)

    def test_median_of_unit_level(self):
        assert analytic.first_passage_quantile(1.0, 0.5) == pytest.approx(2.198109, rel=1e-6)

    def test_deblassie_bound_dominates_pinched_tail(self):
        for log_t in (2.0, 4.0, 8.0):
            exact = analytic.first_passage_cdf(log_t / 2, 1.0)
            assert exact <= analytic.deblassie_bound(math.exp(log_t), 1.0)

    def test_deblassie_bound_needs_t_above_one(self):
        with pytest.raises(DomainError):
            analytic.deblassie_bound(1.0, 1.0)


class TestConeConstants:
    def test_ratio_at_one(self):
        constants = analytic.cone_constants(1.0)
        assert constants.ratio == pytest.approx(1.0, abs=1e-6)
        assert constants.expected_ratio == pytest.approx(1.0)
        assert constants.quad_error < 1e-6

    def test_gamma_ratio(self):
        assert analytic.gamma_ratio(1.0) == pytest.approx(1.0)
        assert analytic.gamma_ratio(0.5) == pytest.approx(2**0.5 * math.gamma(1.25) / math.gamma(0.75))

    def test_positive_and_finite(self):
        constants = analytic.cone_constants(1.5)
        assert 0 < constants.r_alpha < np.inf
        assert 0 < constants.k_alpha < np.inf

    def test_alpha_out_of_range(self):
        with pytest.raises(DomainError):
            analytic.winding_moment_integral(2.0)


class TestLogDerivative:
    def test_kernels_against_phi_logderivative(self):
        evidence = analytic.phi_logderiv_probe([1.0, 2.0], sample_points=(1.0,), max_order=3)
        assert evidence.analytic[0] == pytest.approx(0.802277, abs=1e-6)
        assert evidence.max_rel_error["bessel"] < 1e-4
        assert evidence.max_rel_error["bessel_plus_cosh"] > 1e-2
        assert evidence.monotone_target == "phi'/phi"
        assert evidence.monotone_checks == 3
        assert evidence.monotone_violations == []

    def test_kernel_at_zero(self):
        assert analytic.logderiv_kernel(0.0) == 0.0
        assert analytic.logderiv_kernel(0.0, "bessel_plus_cosh") == pytest.approx(1.0)

    def test_empty_grid(self):
        with pytest.raises(DomainError):
            analytic.phi_logderiv_probe([])
