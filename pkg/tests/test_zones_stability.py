"""Unit tests for zones_stability.py module."""

import numpy as np
import pytest

from src.errors import ParameterError, StabilityError
from src.propagator import propagator_norm
from src.symbol_core import exact_eigenvalues, validate_params
from src.zones_stability import (
    ZoneConfig,
    eta,
    exterior_coefficient,
    imaginary_root_certificate,
    pointwise_constants_fit,
    smoothstep,
    spectral_gap_scan,
    zone_weights,
)


class TestZoneConfig:
    """Test suite for ZoneConfig validation."""

    def test_defaults(self):
        """Test the default radii and their transition bands."""
        zone = ZoneConfig()
        assert zone.int_band == pytest.approx((0.05, 0.1))
        assert zone.ext_band == pytest.approx((10.0, 15.0))
        assert zone.to_dict() == {"eps": 0.1, "N": 10.0, "w_int": 0.5, "w_ext": 0.5}

    def test_eps_above_N_rejected(self):
        """Test that the small zone must end before the exterior zone."""
        with pytest.raises(ParameterError, match="Zone radii"):
            ZoneConfig(eps=20.0, N=10.0)

    def test_full_width_rejected(self):
        """Test that w_int = 1 collapses the plateau and is rejected."""
        with pytest.raises(ParameterError):
            ZoneConfig(w_int=1.0)

    def test_zero_width_rejected(self):
        """Test that a zero-width band is rejected."""
        with pytest.raises(ParameterError):
            ZoneConfig(w_ext=0.0)


class TestZoneWeights:
    """Test suite for the partition of unity."""

    def test_plateau_below_band(self):
        """Test that chi_int is 1 below its transition band."""
        zone = ZoneConfig()
        weights = zone_weights(zone, zone.eps * 0.4)
        assert tuple(weights) == pytest.approx((1.0, 0.0, 0.0))

    def test_band_midpoint(self):
        """Test smoothstep symmetry at the middle of the band."""
        zone = ZoneConfig()
        assert zone_weights(zone, 0.075).chi_int == pytest.approx(0.5)

    def test_exterior_plateau(self):
        """Test that chi_ext is 1 beyond N (1 + w_ext)."""
        assert zone_weights(ZoneConfig(), 100.0).chi_ext == pytest.approx(1.0)

    def test_partition_of_unity(self):
        """Test that the weights sum to 1 and stay in [0, 1]."""
        r = np.random.default_rng(7).uniform(0.0, 30.0, 10_000)
        weights = zone_weights(ZoneConfig(), r)
        total = weights.chi_int + weights.chi_bdd + weights.chi_ext
        np.testing.assert_allclose(total, 1.0, atol=1e-12)
        for w in weights:
            assert np.all((w >= -1e-15) & (w <= 1.0 + 1e-15))

    def test_monotone_across_bands(self):
        """Test that chi_int falls and chi_ext rises."""
        zone = ZoneConfig()
        weights = zone_weights(zone, np.linspace(0.0, 20.0, 2001))
        assert np.all(np.diff(weights.chi_int) <= 0)
        assert np.all(np.diff(weights.chi_ext) >= 0)

    def test_smoothstep_endpoints(self):
        """Test that smoothstep clamps to 0 and 1."""
        np.testing.assert_allclose(smoothstep([-1.0, 0.0, 1.0, 2.0]), [0.0, 0.0, 1.0, 1.0])


class TestEta:
    """Test suite for the dissipative structure."""

    def test_unit_frequency(self, equal_params):
        """Test that eta(1) = 1/2."""
        assert eta(equal_params, 1.0) == pytest.approx(0.5)

    def test_value_at_four(self, equal_params):
        """Test 4^1.5 / (1 + 4) = 1.6."""
        assert eta(equal_params, 4.0) == pytest.approx(1.6)

    def test_limits(self, below_params):
        """Test eta ~ r^{2-2rho} near 0 and r^{2-2theta} at infinity."""
        assert eta(below_params, 1e-8) / 1e-8**1.6 == pytest.approx(1.0, rel=1e-6)
        assert eta(below_params, 1e8) / 1e8**0.6 == pytest.approx(1.0, rel=1e-6)

    def test_negative_frequency_rejected(self, equal_params):
        """Test that negative radii raise ParameterError."""
        with pytest.raises(ParameterError):
            eta(equal_params, -1.0)


class TestSpectralGapScan:
    """Test suite for the bounded-zone certificate."""

    def test_equal_set(self, equal_params):
        """Test the minimum at the left end of the bounded zone."""
        certificate = spectral_gap_scan(equal_params, ZoneConfig(eps=0.1, N=10.0), 10_000)
        assert certificate.min_real_part == pytest.approx(0.0316, abs=5e-4)
        assert certificate.argmin_r == pytest.approx(0.1, rel=1e-3)
        assert certificate.identity_margin > 0
        assert certificate.samples == 10_000

    def test_friction_case(self):
        """Test that the scan stays positive for rho = 0, theta = 1."""
        p = validate_params(1, 2, 0.0, 1.0)
        assert spectral_gap_scan(p, ZoneConfig(), 1000).min_real_part > 0

    def test_all_regimes_above_threshold(self, below_params, equal_params, above_params):
        """Test the acceptance threshold 1e-3 for the three regime sets."""
        for p in (below_params, equal_params, above_params):
            assert spectral_gap_scan(p, ZoneConfig(), 5000).min_real_part >= 1e-3

    def test_minimum_matches_closed_form(self, equal_params):
        """Test that the reported minimum is a branch value at argmin_r."""
        certificate = spectral_gap_scan(equal_params, ZoneConfig(), 500)
        values = exact_eigenvalues(equal_params, certificate.argmin_r).as_array()
        assert certificate.min_real_part == pytest.approx(np.min(values.real))

    def test_too_few_samples(self, equal_params):
        """Test that fewer than two samples are rejected."""
        with pytest.raises(ParameterError):
            spectral_gap_scan(equal_params, ZoneConfig(), 1)

    def test_to_dict(self, equal_params):
        """Test the certificate serializes every field."""
        payload = spectral_gap_scan(equal_params, ZoneConfig(), 100).to_dict()
        assert set(payload) == {"min_real_part", "argmin_r", "samples", "identity_margin"}


class TestImaginaryRootCertificate:
    """Test suite for the imaginary-root identity."""

    def test_unit_frequency(self, equal_params):
        """Test 2 * 5 * 4 + 9 = 49 at r = 1."""
        assert imaginary_root_certificate(equal_params, 1.0) == pytest.approx(49.0)

    def test_positive_everywhere(self, above_params):
        """Test positivity over a wide range of radii."""
        r = np.geomspace(1e-6, 1e6, 500)
        assert np.all(imaginary_root_certificate(above_params, r) > 0)


class TestPointwiseConstantsFit:
    """Test suite for the pointwise propagator estimate."""

    R = np.geomspace(1e-3, 1e3, 31)
    T = [0.0, 1.0, 10.0, 100.0]

    def test_fit_for_regime_sets(self, below_params, equal_params, above_params):
        """Test that c > 0 with C <= 100 for the three regime sets."""
        for p in (below_params, equal_params, above_params):
            constants = pointwise_constants_fit(p, self.R, self.T)
            assert constants.c > 0
            assert 1.0 <= constants.C <= 100.0

    def test_envelope_holds_on_samples(self, equal_params):
        """Test |e^{-Bt}| <= C e^{-c eta t} on every sample pair."""
        constants = pointwise_constants_fit(equal_params, self.R, self.T)
        norms = np.asarray(propagator_norm(equal_params, self.R[:, None], np.array(self.T)[None, :]))
        envelope = constants.C * np.exp(-constants.c * np.asarray(eta(equal_params, self.R))[:, None] * np.array(self.T))
        assert np.all(norms <= envelope * (1.0 + 1e-9))

    def test_cap_below_one_is_infeasible(self, equal_params):
        """Test that C < 1 contradicts the identity at t = 0."""
        with pytest.raises(StabilityError):
            pointwise_constants_fit(equal_params, self.R, self.T, max_constant=0.5)

    def test_needs_positive_time(self, equal_params):
        """Test that t = 0 alone carries no decay information."""
        with pytest.raises(ParameterError, match="positive time"):
            pointwise_constants_fit(equal_params, self.R, [0.0])

    def test_empty_samples(self, equal_params):
        """Test that empty sample sets are rejected."""
        with pytest.raises(ParameterError):
            pointwise_constants_fit(equal_params, [], self.T)


class TestExteriorCoefficient:
    """Test suite for exterior_coefficient."""

    def test_positive_for_smoothing_set(self, equal_params):
        """Test a positive coefficient for theta < 1."""
        samples = np.geomspace(15.0, 1e4, 200)
        k = exterior_coefficient(equal_params, samples)
        assert k > 0
        min_real = exact_eigenvalues(equal_params, samples).min_real_part()
        assert np.all(min_real >= k * samples**0.5 * (1.0 - 1e-12))

    def test_rejects_non_positive_samples(self, equal_params):
        """Test that r <= 0 is rejected."""
        with pytest.raises(ParameterError):
            exterior_coefficient(equal_params, [0.0, 1.0])
