import math

import numpy as np
import pytest

from nvmag import mwsignal
from nvmag.mwsignal import (UnsupportedModulationError, am_two_tone,
                            bessel_sidebands, carson_bandwidth, fm,
                            instantaneous_detuning, pm, sideband_amplitude)


def bessel_series(n, beta, terms=60):
    """Power-series J_n(beta) = sum_k (-1)^k (beta/2)^(n+2k) / (k! (n+k)!)."""
    total = 0.0
    for k in range(terms):
        total += (-1.0) ** k * (beta / 2.0) ** (n + 2 * k) / (
            math.factorial(k) * math.factorial(n + k))
    return total


class TestModulation:
    def test_beta_definitions(self):
        assert fm(2.87e9, 9e3, 18e3).beta == pytest.approx(2.0)
        assert pm(2.87e9, 9e3, 2.0).beta == pytest.approx(2.0)

    def test_cross_check_rejects_inconsistent_deviations(self):
        with pytest.raises(ValueError):
            mwsignal.MWModulation(kind="FM", f0=2.87e9, f_m=9e3, f_d=18e3,
                                  phi_d=3.0)

    def test_nonpositive_modulation_frequency_rejected(self):
        with pytest.raises(ValueError):
            fm(2.87e9, 0.0, 1e3)


class TestInstantaneousDetuning:
    def test_zero_deviation(self):
        mod = fm(2.87e9, 9e3, 0.0)
        t = np.linspace(0, 1e-3, 50)
        assert np.all(instantaneous_detuning(mod, t) == 0.0)

    def test_peak_deviation_at_time_zero(self):
        assert instantaneous_detuning(fm(2.87e9, 9e3, 18e3), 0.0) == pytest.approx(18e3)

    def test_pm_equals_fm_pointwise(self):
        t = np.linspace(0, 2e-3, 400)
        a = instantaneous_detuning(pm(2.87e9, 9e3, 2.0), t)
        b = instantaneous_detuning(fm(2.87e9, 9e3, 18e3), t)
        np.testing.assert_allclose(a, b, rtol=1e-12)

    def test_am_unsupported(self):
        mod = mwsignal.MWModulation(kind="AM", f0=2.87e9, f_m=1e4)
        with pytest.raises(UnsupportedModulationError):
            instantaneous_detuning(mod, 0.0)


class TestCarsonBandwidth:
    def test_pm_deployment_value(self):
        assert carson_bandwidth(pm(2.87e9, 9e3, 2.0)) == pytest.approx(54e3)

    def test_fm_beta_four(self):
        # beta = 4 at f_m = 10 kHz: f_d = 40 kHz, width 2(40 + 10) = 100 kHz
        assert carson_bandwidth(fm(2.87e9, 10e3, 40e3)) == pytest.approx(100e3)

    def test_zero_deviation_reduces_to_twice_f_m(self):
        assert carson_bandwidth(fm(2.87e9, 7e3, 0.0)) == pytest.approx(14e3)

    def test_am_unsupported(self):
        mod = mwsignal.MWModulation(kind="AM", f0=2.87e9, f_m=1e4)
        with pytest.raises(UnsupportedModulationError):
            carson_bandwidth(mod)


class TestBesselSidebands:
    def test_beta_two_reference_values(self):
        amps = bessel_sidebands(2.0, 3)
        np.testing.assert_allclose(amps, [0.224, 0.577, 0.353, 0.129],
                                   atol=1e-3)

    def test_zero_index(self):
        amps = bessel_sidebands(0.0, 4)
        np.testing.assert_allclose(amps, [1, 0, 0, 0, 0], atol=1e-15)

    def test_against_power_series(self):
        amps = bessel_sidebands(1.0, 5)
        want = [bessel_series(n, 1.0) for n in range(6)]
        np.testing.assert_allclose(amps, want, atol=1e-12)

    def test_negative_orders_alternate_sign(self):
        for n in range(1, 6):
            assert sideband_amplitude(-n, 1.7) == pytest.approx(
                (-1.0) ** n * sideband_amplitude(n, 1.7), rel=1e-12)

    def test_parseval_sum(self):
        for beta in (0.5, 1.0, 2.0, 4.0, 8.0):
            n_max = math.ceil(beta) + 10
            total = sum(sideband_amplitude(n, beta) ** 2
                        for n in range(-n_max, n_max + 1))
            assert total >= 0.9999

    def test_carson_band_captures_98_percent_power(self):
        for beta in (0.5, 1.0, 2.0, 4.0, 10.0):
            n_band = math.floor(beta + 1.0)
            captured = sum(sideband_amplitude(n, beta) ** 2
                           for n in range(-n_band, n_band + 1))
            assert captured >= 0.98

    def test_pm_and_fm_share_sidebands_at_equal_beta(self):
        a = bessel_sidebands(pm(2.87e9, 9e3, 2.0).beta, 8)
        b = bessel_sidebands(fm(2.87e9, 9e3, 18e3).beta, 8)
        np.testing.assert_allclose(a, b, rtol=1e-15)


class TestAmTwoTone:
    def test_tone_positions(self):
        sb = am_two_tone(2.87e9, 10e3)
        assert sb.lower == pytest.approx(2.87e9 - 10e3)
        assert sb.upper == pytest.approx(2.87e9 + 10e3)
        assert sb.splitting == pytest.approx(20e3)
        assert not sb.degenerate

    def test_splitting_flag_near_line_half_width(self):
        hwhm = 28e3
        assert am_two_tone(2.87e9, 20e3, odmr_hwhm=hwhm).splitting_resolved
        assert not am_two_tone(2.87e9, 5e3, odmr_hwhm=hwhm).splitting_resolved

    def test_degenerate_single_tone_flagged(self):
        sb = am_two_tone(2.87e9, 0.0)
        assert sb.degenerate
        assert sb.lower == sb.upper == pytest.approx(2.87e9)
