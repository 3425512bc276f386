"""Unit tests for analysis.py module."""

import numpy as np
import pytest

from src.analysis import (
    ResidualOrderFit,
    StudyConfig,
    fit_decay,
    gevrey_indicator,
    norm_series,
    refinement_q,
    residual_order_fit,
    theoretical_rates,
)
from src.errors import AnalysisError, ParameterError
from src.spectral_field import GridSpec, InitialDataSpec
from src.symbol_core import validate_params
from src.zones_stability import ZoneConfig


class TestFitDecay:
    """Test suite for fit_decay."""

    def test_exact_power_law(self):
        """Test that a pure power of 1 + t is recovered."""
        t = np.geomspace(1e2, 1e4, 25)
        series = list(zip(t, 3.0 * (1.0 + t) ** -0.5))
        fit = fit_decay(series, (1e2, 1e4))
        assert fit.slope == pytest.approx(-0.5, abs=1e-12)
        assert fit.stderr == pytest.approx(0.0, abs=1e-10)
        assert fit.n_points == 25
        assert fit.intercept == pytest.approx(np.log(3.0))

    def test_window_selects_points(self):
        """Test that points outside the window are ignored."""
        t = np.geomspace(1.0, 1e4, 41)
        values = np.where(t < 100.0, 1.0, (1.0 + t) ** -1.0)
        fit = fit_decay(list(zip(t, values)), (100.0, 1e4))
        assert fit.slope == pytest.approx(-1.0, abs=1e-10)

    def test_too_few_points(self):
        """Test that fewer than 5 points in the window raise."""
        series = [(t, 1.0 / t) for t in (1.0, 2.0, 3.0, 4.0)]
        with pytest.raises(AnalysisError, match="at least 5"):
            fit_decay(series, (1.0, 4.0))

    def test_non_positive_norm(self):
        """Test that a zero norm in the window raises."""
        series = [(float(t), 1.0) for t in range(1, 7)] + [(7.0, 0.0)]
        with pytest.raises(AnalysisError, match="positive"):
            fit_decay(series, (1.0, 7.0))

    def test_invalid_window(self):
        """Test that the window must be positive and increasing."""
        with pytest.raises(AnalysisError):
            fit_decay([(1.0, 1.0)] * 6, (5.0, 1.0))


class TestTheoreticalRates:
    """Test suite for theoretical_rates and refinement_q."""

    def test_energy_rates_equal_set(self, equal_params):
        """Test s/(2-2rho) + (2-m)/(m(2-2rho)) on the balanced line."""
        assert theoretical_rates(equal_params, 0.0, m=1.0).base_rate == pytest.approx(2.0 / 3.0)
        assert theoretical_rates(equal_params, 1.0, m=1.0).base_rate == pytest.approx(4.0 / 3.0)
        assert theoretical_rates(equal_params, 0.0, m=2.0).base_rate == pytest.approx(0.0)

    def test_friction_case(self):
        """Test the rate for rho = 0, theta = 1."""
        p = validate_params(1, 2, 0.0, 1.0)
        assert theoretical_rates(p, 0.0, m=1.0).base_rate == pytest.approx(0.5)

    def test_weighted_zero_mean(self, equal_params):
        """Test (s + gamma + 1)/(2-2rho) for zero-mean weighted data."""
        rates = theoretical_rates(equal_params, 0.0, gamma=1.0)
        assert rates.base_rate == pytest.approx(2.0 / 1.5)

    def test_weighted_nonzero_mean(self, equal_params):
        """Test that the mean term dominates for nonzero-mean data."""
        rates = theoretical_rates(equal_params, 0.0, gamma=1.0, zero_mean=False)
        assert rates.base_rate == pytest.approx(1.0 / 1.5)

    def test_origin_shifts(self, equal_params):
        """Test the extra decay of u1 and u0 data."""
        base = theoretical_rates(equal_params, 0.0, m=1.0).base_rate
        assert theoretical_rates(equal_params, 0.0, m=1.0, origin="u1").base_rate == pytest.approx(base + 0.5 / 1.5)
        assert theoretical_rates(equal_params, 0.0, m=1.0, origin="u0").base_rate == pytest.approx(base + 1.0 / 1.5)

    def test_exactly_one_data_class(self, equal_params):
        """Test that m and gamma are mutually exclusive."""
        with pytest.raises(ParameterError):
            theoretical_rates(equal_params, 0.0, m=1.0, gamma=1.0)
        with pytest.raises(ParameterError):
            theoretical_rates(equal_params, 0.0)

    def test_range_checks(self, equal_params):
        """Test that m, gamma and s are range-checked."""
        with pytest.raises(ParameterError):
            theoretical_rates(equal_params, 0.0, m=3.0)
        with pytest.raises(ParameterError):
            theoretical_rates(equal_params, 0.0, gamma=1.5)
        with pytest.raises(ParameterError):
            theoretical_rates(equal_params, -1.0, m=1.0)

    @pytest.mark.parametrize(
        "rho, theta, expected",
        [(0.2, 0.7, 0.25), (0.25, 0.75, 1.0 / 3.0), (0.3, 0.9, 0.4 / 1.4)],
    )
    def test_refinement_q(self, rho, theta, expected):
        """Test q for the three regime sets."""
        assert refinement_q(rho, theta) == pytest.approx(expected)

    def test_q_continuous_across_threshold(self):
        """Test that both branches of q agree on rho + theta = 1."""
        for rho in np.linspace(0.0, 0.49, 20):
            theta = 1.0 - rho
            assert refinement_q(rho, theta - 1e-13) == pytest.approx(refinement_q(rho, theta), abs=1e-12)

    def test_q_independent_of_theta_above(self):
        """Test that q does not depend on theta above the threshold."""
        values = [refinement_q(0.3, theta) for theta in np.linspace(0.71, 1.0, 20)]
        assert np.ptp(values) == 0.0


class TestResidualOrderFit:
    """Test suite for residual_order_fit."""

    def test_small_band_below_set(self, below_params):
        """Test that every fitted small-r order meets the prediction."""
        fit = residual_order_fit(below_params, "small", (1e-4, 1e-2), 40)
        assert fit.predicted["b-minus"] == pytest.approx(2.0)
        fitted = [v for v in fit.exponents.values() if v is not None]
        assert fitted
        assert all(v >= 1.85 for v in fitted)
        assert fit.passes(0.15)

    def test_large_band_below_set_plus_branches(self, below_params):
        """Test that the plus remainders grow like r^(2 rho) past the threshold."""
        fit = residual_order_fit(below_params, "large", (1e4, 1e6), 40)
        assert fit.predicted["b-plus"] == pytest.approx(0.4)
        assert fit.predicted["b-minus"] == pytest.approx(0.2)
        assert fit.exponents["b-plus"] == pytest.approx(0.4, abs=0.05)
        assert fit.exponents["a-plus"] == pytest.approx(0.4, abs=0.05)
        assert fit.exponents["b-minus"] < 0.0
        assert fit.passes(0.15)

    @pytest.mark.parametrize("values", [(1, 2, 0.2, 0.7), (1, 2, 0.25, 0.75), (1, 2, 0.3, 0.9)])
    @pytest.mark.parametrize("regime, band", [("small", (1e-4, 1e-2)), ("large", (1e4, 1e6))])
    def test_regime_sets_pass(self, values, regime, band):
        """Test the asymptotic orders for all regime sets and both ends."""
        assert residual_order_fit(validate_params(*values), regime, band, 40).passes(0.15)

    def test_exact_branch_reported(self, equal_params):
        """Test that the a-block terms on the balanced line are exact."""
        fit = residual_order_fit(equal_params, "small", (1e-4, 1e-2), 40)
        assert fit.to_dict()["exponents"]["a-minus"] == "exact"

    def test_band_outside_regime(self, equal_params):
        """Test that a small band must stay below 1e-2."""
        with pytest.raises(ParameterError):
            residual_order_fit(equal_params, "small", (1e-3, 1.0), 40)
        with pytest.raises(ParameterError):
            residual_order_fit(equal_params, "large", (10.0, 1e4), 40)

    def test_minimum_points(self, equal_params):
        """Test that n < 20 is rejected."""
        with pytest.raises(ParameterError):
            residual_order_fit(equal_params, "small", (1e-4, 1e-2), 10)

    def test_pass_direction(self):
        """Test one-sided comparisons for the two regimes."""
        small = ResidualOrderFit("small", {"b-minus": 2.0, "a-minus": 2.0}, {"b-minus": 1.9, "a-minus": None}, {}, (1e-4, 1e-2), 40)
        assert small.passes(0.15)
        assert not ResidualOrderFit("small", {"b-minus": 2.0}, {"b-minus": 1.8}, {}, (1e-4, 1e-2), 40).passes(0.15)
        large = ResidualOrderFit("large", {"b-minus": -0.2}, {"b-minus": -1.0}, {}, (1e4, 1e6), 40)
        assert large.passes(0.15)
        assert not ResidualOrderFit("large", {"b-minus": -0.2}, {"b-minus": 0.0}, {}, (1e4, 1e6), 40).passes(0.15)


class TestGevreyIndicator:
    """Test suite for gevrey_indicator."""

    def test_divergent_without_smoothing(self):
        """Test that theta = 1 exceeds 1e3 at r = 1e4."""
        p = validate_params(1, 2, 0.25, 1.0)
        assert gevrey_indicator(p, 1.0, 4.0, [1e4], weight_exponent=0.1) > 1e3

    def test_zero_time_is_one(self, equal_params):
        """Test that the indicator is the identity norm at t = 0."""
        assert gevrey_indicator(equal_params, 0.0, 1.0, [20.0, 100.0]) == pytest.approx(1.0)

    def test_invalid_arguments(self, equal_params):
        """Test that c' must be positive and samples nonempty."""
        with pytest.raises(ParameterError):
            gevrey_indicator(equal_params, 1.0, 0.0, [20.0])
        with pytest.raises(ParameterError):
            gevrey_indicator(equal_params, 1.0, 1.0, [])

    def test_samples_must_be_exterior(self, equal_params):
        """Test that samples at or below N are rejected."""
        with pytest.raises(ParameterError, match="exterior"):
            gevrey_indicator(equal_params, 1.0, 1.0, [5.0, 20.0])
        with pytest.raises(ParameterError, match="exterior"):
            gevrey_indicator(equal_params, 1.0, 1.0, [10.0])

    def test_zone_sets_the_cutoff(self, equal_params):
        """Test that a wider bounded zone moves the exterior cutoff."""
        zone = ZoneConfig(eps=0.1, N=50.0)
        with pytest.raises(ParameterError):
            gevrey_indicator(equal_params, 1.0, 1.0, [20.0], zone=zone)
        assert gevrey_indicator(equal_params, 0.0, 1.0, [100.0], zone=zone) == pytest.approx(1.0)


class TestStudyConfig:
    """Test suite for StudyConfig validation."""

    def test_defaults(self, equal_params):
        """Test the default study window and pipeline."""
        study = StudyConfig(params=equal_params)
        assert study.pipeline == "polar"
        assert len(study.times) == 25
        assert study.to_dict()["window"] == [100.0, 10000.0]

    def test_collects_errors(self, equal_params):
        """Test that every invalid field is reported."""
        with pytest.raises(ParameterError) as excinfo:
            StudyConfig(params=equal_params, pipeline="spherical", gamma=1.0, angles=2)
        message = str(excinfo.value)
        assert "pipeline" in message and "exactly one" in message and "angles" in message

    def test_times_must_increase(self, equal_params):
        """Test that decreasing times are rejected."""
        with pytest.raises(ParameterError):
            StudyConfig(params=equal_params, times=(2.0, 1.0))

    def test_unknown_target(self, equal_params):
        """Test that norm_series validates the target."""
        with pytest.raises(AnalysisError):
            norm_series(StudyConfig(params=equal_params), "energy")


class TestNormSeries:
    """Test suite for norm_series pipelines."""

    def test_lattice_agrees_with_polar(self, equal_params):
        """Test that both pipelines give the same early-time norms.

        The lattice counts the undamped zero node at full weight; on this grid
        that contribution stays below one percent of the norm up to t = 5.
        """
        times = (1.0, 2.0, 3.0, 4.0, 5.0)
        common = dict(
            params=equal_params,
            data=InitialDataSpec(kind="gaussian", target="U0"),
            times=times,
            window=(1.0, 5.0),
            grid=GridSpec(512, 160.0),
        )
        lattice = norm_series(StudyConfig(pipeline="lattice", **common))
        polar = norm_series(StudyConfig(pipeline="polar", **common))
        for (t1, v1), (t2, v2) in zip(lattice, polar):
            assert t1 == t2
            assert v1 == pytest.approx(v2, rel=1e-2)

    def test_norms_decrease(self, equal_params):
        """Test that the polar norm decays in time."""
        study = StudyConfig(
            params=equal_params,
            data=InitialDataSpec(kind="gaussian", target="U0"),
            times=(1.0, 10.0, 100.0),
            window=(1.0, 100.0),
        )
        values = [v for _, v in norm_series(study)]
        assert values[0] > values[1] > values[2] > 0

    @pytest.mark.slow
    def test_energy_slope_equal_set(self, equal_params):
        """Test the s = 0, m = 1 decay slope -2/3 for Gaussian U0 data."""
        study = StudyConfig(params=equal_params, data=InitialDataSpec(kind="gaussian", target="U0"))
        fit = fit_decay(norm_series(study), study.window)
        assert fit.slope == pytest.approx(-2.0 / 3.0, abs=0.1)

    @pytest.mark.slow
    def test_gap_decays_faster(self, equal_params):
        """Test that the localized gap gains at least q over the solution."""
        study = StudyConfig(params=equal_params, data=InitialDataSpec(kind="gaussian", target="U0"))
        solution = fit_decay(norm_series(study, "solution", localized=True), study.window)
        gap = fit_decay(norm_series(study, "diffusion-gap"), study.window)
        assert gap.slope - solution.slope <= -refinement_q(0.25, 0.75) + 0.15
