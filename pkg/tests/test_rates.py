import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pwrates.piecewise import eval_piecewise, preset_experiment_target
from pwrates.rates import (
    RateError, RateReport, empirical_l2_error, fit_rate, fourier_lower_bound, paper_series_J,
    series_exponent, theoretical_rate,
)

pos = st.floats(0.05, 20)


class TestTheoreticalRate:
    def test_examples(self):
        assert theoretical_rate(2, 1, 2) == pytest.approx(-0.5)
        assert theoretical_rate(1, 1, 2) == pytest.approx(-0.5)
        assert theoretical_rate(2, 2, 2) == pytest.approx(-2 / 3)

    def test_alpha_to_infinity(self):
        assert theoretical_rate(2, 1e12, 2) == pytest.approx(-2 / 3, abs=1e-9)
        assert theoretical_rate(2, math.inf, 2) == pytest.approx(-2 / 3)

    def test_invalid(self):
        with pytest.raises(RateError):
            theoretical_rate(0, 1, 2)
        with pytest.raises(RateError):
            theoretical_rate(1, 1, 1)

    @settings(max_examples=200)
    @given(pos, pos, st.integers(2, 10), st.floats(0, 5))
    def test_monotone(self, beta, alpha, D, bump):
        r = theoretical_rate(beta, alpha, D)
        assert theoretical_rate(beta + bump, alpha, D) <= r + 1e-15
        assert theoretical_rate(beta, alpha + bump, D) <= r + 1e-15

    @settings(max_examples=200)
    @given(st.floats(1.01, 20), st.floats(2.01, 20), st.integers(2, 10))
    def test_strictly_faster_than_series(self, beta, alpha, D):
        assert theoretical_rate(beta, alpha, D) < series_exponent(D)


class TestFourierBound:
    def test_example(self):
        expect = 1000 ** (-2 / 3) * (0.25 + 1 / (4 * math.pi**2))
        assert fourier_lower_bound(1000, 1, 0.5) == pytest.approx(expect, rel=1e-12)
        assert fourier_lower_bound(1000, 1, 0.5) == pytest.approx(0.0027533, abs=1e-7)

    def test_noise_free_floor(self):
        assert fourier_lower_bound(100, 1, 0.0) > 0

    def test_higher_dimension_exponent(self):
        assert series_exponent(2) == -0.5
        ratio = fourier_lower_bound(400, 2, 0.3) / fourier_lower_bound(100, 2, 0.3)
        assert ratio == pytest.approx(4 ** -0.5)

    @settings(max_examples=100)
    @given(st.floats(1, 1e6), st.floats(1.01, 10), st.integers(1, 5), st.floats(0, 3))
    def test_decreasing_in_n_increasing_in_sigma(self, n, factor, D, sigma):
        assert fourier_lower_bound(n * factor, D, sigma) < fourier_lower_bound(n, D, sigma)
        assert fourier_lower_bound(n, D, sigma + 0.1) > fourier_lower_bound(n, D, sigma)

    def test_series_schedule(self):
        assert [paper_series_J(n) for n in (100, 1000, 10_000, 100_000)] == [4, 10, 21, 46]
        assert paper_series_J(1) == 1


class TestEmpiricalError:
    def test_perfect_predictor(self):
        f = preset_experiment_target()
        assert empirical_l2_error(lambda x: eval_piecewise(f, x), f, 1000, seed=1) == 0.0

    def test_constant_offset(self):
        f = preset_experiment_target()
        err = empirical_l2_error(lambda x: eval_piecewise(f, x) + 0.1, f, 100_000, seed=2)
        assert err == pytest.approx(0.01, rel=1e-9)

    def test_seed_spread(self):
        f = preset_experiment_target()

        def pred(x):
            return eval_piecewise(f, x) + np.sin(7 * x[:, 0])

        mc_n = 20_000
        a = empirical_l2_error(pred, f, mc_n, seed=1)
        b = empirical_l2_error(pred, f, mc_n, seed=2)
        x = np.random.default_rng(0).random((mc_n, 1))
        se = np.std(np.sin(7 * x) ** 2) / math.sqrt(mc_n)
        assert abs(a - b) <= 3 * math.sqrt(2) * se

    def test_callable_target_needs_dim(self):
        with pytest.raises(RateError):
            empirical_l2_error(lambda x: 0, lambda x: 0, 10, seed=0)
        assert empirical_l2_error(lambda x: np.zeros(len(x)), lambda x: np.ones(len(x)), 10, 0, dim=1) == 1.0


class TestFitRate:
    def test_exact_power_law(self):
        slope, icpt = fit_rate([(n, 3 * n**-0.5) for n in (100, 400, 1600)])
        assert slope == pytest.approx(-0.5, abs=1e-12)
        assert icpt == pytest.approx(math.log(3), abs=1e-12)

    def test_constant(self):
        assert fit_rate([(10, 2.0), (100, 2.0), (1000, 2.0)])[0] == pytest.approx(0, abs=1e-12)

    @settings(max_examples=100)
    @given(st.floats(-3, 1), st.floats(0.01, 100))
    def test_recovers_planted_slope(self, slope, scale):
        s, _ = fit_rate([(n, scale * n**slope) for n in (50, 200, 1000, 5000)])
        assert abs(s - slope) < 1e-10

    def test_errors(self):
        with pytest.raises(RateError):
            fit_rate([(10, 1.0), (20, 0.0)])
        with pytest.raises(RateError):
            fit_rate([(10, 1.0), (10, 2.0)])

    def test_report(self):
        rep = RateReport.from_errors("m", {100: [0.1, 0.3], 400: [0.05, 0.05]}, -0.5)
        assert rep.series[0] == (100, pytest.approx(0.2), pytest.approx(math.sqrt(0.02)))
        assert rep.slope == pytest.approx(math.log(0.25) / math.log(4))
        assert rep.theoretical_exponent == -0.5
