import math

import numpy as np
import pytest

from nvmag import analysis
from nvmag.analysis import (BandError, NoiseSpectrum, UnresolvableToneError,
                            demodulate_carrier, detrend_linear,
                            flux_gain_from_slopes, gradiometer_difference,
                            min_detectable_field, noise_spectrum,
                            recover_calibration_tones)
from nvmag.trace import TimeTrace, TraceFormatError, load_trace, save_trace

TWO_PI = 2 * math.pi


def make_trace(values, fs=900.0, units="T"):
    return TimeTrace(np.asarray(values, dtype=float), fs, units=units)


class TestTraceIo:
    def test_minimal_two_row_file(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("time_s,value_v\n0.0,1.5\n0.001,2.5\n")
        tr = load_trace(p)
        assert len(tr) == 2
        assert tr.units == "V"
        assert tr.sample_rate == pytest.approx(1000.0)

    def test_jittered_timestamps_rejected(self, tmp_path):
        p = tmp_path / "t.csv"
        rows = [f"{i / 1000 + (2e-9 if i == 5 else 0)},{i}" for i in range(10)]
        p.write_text("time_s,value_t\n" + "\n".join(rows) + "\n")
        with pytest.raises(TraceFormatError, match="non-uniform"):
            load_trace(p)

    def test_malformed_row_reports_line_number(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("time_s,value_v\n0.0,1.0\n0.001,nope_zero\n0.002,2.0\n")
        with pytest.raises(TraceFormatError, match=":3"):
            load_trace(p)

    def test_bad_header_rejected(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("time,volts\n0,1\n1,2\n")
        with pytest.raises(TraceFormatError, match="header"):
            load_trace(p)

    def test_round_trip_identity(self, tmp_path, rng):
        tr = make_trace(rng.normal(size=257), fs=900.0, units="T")
        p = tmp_path / "t.csv"
        save_trace(tr, p)
        back = load_trace(p)
        np.testing.assert_array_equal(back.samples, tr.samples)
        assert back.sample_rate == pytest.approx(tr.sample_rate, rel=1e-12)
        assert back.units == tr.units


class TestDetrend:
    def test_pure_ramp_removed_exactly(self):
        t = np.arange(1000) / 900.0
        tr = make_trace(5.0e-9 * t + 2.0)
        resid, slope, intercept = detrend_linear(tr)
        assert slope == pytest.approx(5.0e-9, rel=1e-12)
        assert intercept == pytest.approx(2.0, rel=1e-12)
        assert np.abs(resid.samples).max() <= 1e-12 * np.abs(tr.samples).max()

    def test_sine_preserved_on_top_of_ramp(self):
        t = np.arange(9000) / 900.0
        sine = np.sin(TWO_PI * 7.3 * t)
        tr = make_trace(1e-6 * t + sine)
        resid, slope, _ = detrend_linear(tr)
        # the sine leaks a little slope on a finite window; the residual
        # matches the sine minus its own best-fit line
        sine_resid = detrend_linear(make_trace(sine))[0].samples
        np.testing.assert_allclose(resid.samples, sine_resid, atol=1e-9)

    def test_constant_trace_zero_slope(self):
        tr = make_trace(np.full(100, 3.3))
        _, slope, intercept = detrend_linear(tr)
        assert slope == pytest.approx(0.0, abs=1e-15)
        assert intercept == pytest.approx(3.3)

    def test_idempotent(self, rng):
        tr = make_trace(rng.normal(size=512) + 2e-3 * np.arange(512))
        once, _, _ = detrend_linear(tr)
        twice, slope2, _ = detrend_linear(once)
        assert abs(slope2) <= 1e-9 * abs(detrend_linear(tr)[1])
        np.testing.assert_allclose(twice.samples, once.samples, atol=1e-12)


class TestNoiseSpectrum:
    def test_deployment_resolution(self):
        tr = make_trace(np.zeros(65536), fs=900.0)
        spec = noise_spectrum(tr)
        assert spec.resolution == pytest.approx(13.73e-3, abs=1e-5)
        assert spec.measurement_time == pytest.approx(72.82, abs=0.01)

    def test_zero_trace_zero_spectrum(self):
        spec = noise_spectrum(make_trace(np.zeros(1024)))
        assert np.all(spec.amplitude == 0.0)

    def test_bin_centered_tone_amplitude(self):
        fs, n = 900.0, 65536
        t = np.arange(n) / fs
        k = 1200  # exact bin
        f = k * fs / n
        tr = make_trace(150e-12 * np.sin(TWO_PI * f * t))
        spec = noise_spectrum(tr)
        assert spec.amplitude[k] == pytest.approx(150e-12, rel=0.005)

    def test_parseval_rectangular(self, rng):
        tr = make_trace(rng.normal(size=4096))
        spec = noise_spectrum(tr)
        amp = spec.amplitude
        # mean square = dc^2 + sum(paired amp^2)/2 + nyquist^2
        power = amp[0] ** 2 + 0.5 * np.sum(amp[1:-1] ** 2) + amp[-1] ** 2
        assert power == pytest.approx(np.mean(tr.samples**2), rel=1e-9)

    def test_detrended_trace_has_no_dc(self, rng):
        tr = make_trace(rng.normal(size=4096) + 7.0)
        resid, _, _ = detrend_linear(tr)
        spec = noise_spectrum(resid)
        assert spec.amplitude[0] <= 1e-12 * np.abs(resid.samples).max()

    def test_volt_trace_converted_by_scalar_factor(self):
        fs, n = 900.0, 8192
        t = np.arange(n) / fs
        k = 512
        tr = make_trace(2.97e-3 * np.sin(TWO_PI * (k * fs / n) * t), units="V")
        spec = noise_spectrum(tr, scalar_factor=2.97e-6 * 1e9)  # V/nT -> V/T
        assert spec.units == "T"
        assert spec.amplitude[k] == pytest.approx(1e-6, rel=0.005)


class TestSpectrumExport:
    def test_tesla_csv_columns(self, tmp_path, rng):
        spec = noise_spectrum(make_trace(rng.normal(size=256)))
        path = tmp_path / "spec.csv"
        spec.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "freq_hz,amplitude_t"
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        np.testing.assert_allclose(data[:, 1], spec.amplitude)


class TestMinDetectableField:
    def test_deployment_anchor_volts(self):
        # flat 7.2 nV floor over a 72.82 s record, converted by the
        # measured scalar factor
        spec = NoiseSpectrum(freqs=np.linspace(0, 450, 1000),
                             amplitude=np.full(1000, 7.2e-9),
                             resolution=900.0 / 65536,
                             measurement_time=65536 / 900.0, units="V")
        floor, eta = min_detectable_field(spec, (20, 200))
        assert eta == pytest.approx(61.5e-9, rel=0.01)
        eta_tesla = eta / (2.97e-6 * 1e9)
        assert eta_tesla == pytest.approx(20.7e-12, rel=0.01)

    def test_deployment_anchor_tesla(self):
        spec = NoiseSpectrum(freqs=np.linspace(0, 450, 1000),
                             amplitude=np.full(1000, 2e-12),
                             resolution=900.0 / 65536,
                             measurement_time=65536 / 900.0, units="T")
        _, eta = min_detectable_field(spec, (0, 200))
        assert eta == pytest.approx(17e-12, rel=0.01)

    def test_floor_halves_at_fixed_eta_when_time_quadruples(self):
        # eta fixed: floor = eta / sqrt(t)
        freqs = np.linspace(0, 450, 500)
        eta = 17e-12
        for t in (73.0, 4 * 73.0):
            spec = NoiseSpectrum(freqs=freqs,
                                 amplitude=np.full(500, eta / math.sqrt(t)),
                                 resolution=1 / t, measurement_time=t,
                                 units="T")
            floor, eta_got = min_detectable_field(spec, (20, 200))
            assert eta_got == pytest.approx(eta, rel=1e-9)
            assert floor == pytest.approx(eta / math.sqrt(t), rel=1e-9)

    def test_median_ignores_tone_spikes(self, rng):
        freqs = np.linspace(0, 450, 2001)
        amp = np.full(2001, 2e-12)
        amp[400] = 150e-12  # calibration spike
        spec = NoiseSpectrum(freqs=freqs, amplitude=amp, resolution=0.0137,
                             measurement_time=72.8, units="T")
        floor, _ = min_detectable_field(spec, (20, 200))
        assert floor == pytest.approx(2e-12, rel=1e-9)

    def test_empty_band_rejected(self):
        spec = NoiseSpectrum(freqs=np.linspace(0, 450, 100),
                             amplitude=np.ones(100), resolution=1.0,
                             measurement_time=1.0)
        with pytest.raises(BandError):
            min_detectable_field(spec, (500, 600))


def calibration_record(rng, amplitudes=(150e-12, 150e-12, 150e-12),
                       tone_freqs=(2.0, 5.0, 10.0), noise=2e-12,
                       carrier=182.0, fs=900.0, n=65536):
    t = np.arange(n) / fs
    m = sum(a * np.cos(TWO_PI * f * t + 0.4 * i)
            for i, (a, f) in enumerate(zip(amplitudes, tone_freqs)))
    v = m * np.sin(TWO_PI * carrier * t + 0.9)
    if noise:
        v = v + rng.normal(0.0, noise, n)
    return make_trace(v, fs)


class TestCalibrationTones:
    def test_clean_tones_recovered_with_filter_rolloff(self, rng):
        tr = calibration_record(rng, noise=0.0)
        amps = recover_calibration_tones(tr, 182.0, [2.0, 5.0, 10.0])
        assert amps[0] == pytest.approx(150e-12, rel=0.05)
        assert amps[1] == pytest.approx(150e-12, rel=0.05)
        # the 10 Hz tone reads low near the 49 Hz cutoff of the 4-section
        # filter, as on the instrument
        assert 0.90 * 150e-12 <= amps[2] <= 150e-12 * 1.02

    def test_no_tone_reads_noise_floor(self, rng):
        tr = make_trace(rng.normal(0.0, 2e-12, 65536))
        amps = recover_calibration_tones(tr, 182.0, [5.0])
        # bin-level noise: sigma sqrt(2/N_eff) per projection, far below a
        # calibration tone
        assert amps[0] <= 10e-12 / 100.0

    def test_interferer_demodulates_to_difference_frequency(self, rng):
        fs, n = 900.0, 65536
        t = np.arange(n) / fs
        tr = make_trace(0.3 * np.sin(TWO_PI * 150.0 * t)
                        + rng.normal(0, 1e-4, n))
        baseband = demodulate_carrier(tr, 182.0)
        spec = noise_spectrum(
            baseband.with_samples(baseband.samples - baseband.samples.mean()))
        peak = spec.freqs[np.argmax(spec.amplitude[1:]) + 1]
        assert peak == pytest.approx(32.0, abs=2 * spec.resolution)

    def test_unresolvable_tone_rejected(self, rng):
        tr = calibration_record(rng, n=4096)
        with pytest.raises(UnresolvableToneError):
            recover_calibration_tones(tr, 182.0, [0.05])


class TestGradiometer:
    def test_identical_channels_cancel(self, rng):
        a = make_trace(rng.normal(size=4096))
        diff = gradiometer_difference(a, a)
        assert np.all(diff.samples == 0.0)

    def test_antisymmetric(self, rng):
        a = make_trace(rng.normal(size=1024))
        b = make_trace(rng.normal(size=1024))
        ab = gradiometer_difference(a, b).samples
        ba = gradiometer_difference(b, a).samples
        np.testing.assert_array_equal(ab, -ba)

    def test_independent_noise_adds_in_quadrature(self, rng):
        n = 65536
        a = make_trace(rng.normal(0, 2e-12, n))
        b = make_trace(rng.normal(0, 2e-12, n))
        diff = gradiometer_difference(a, b)
        ratio = diff.samples.std() / a.samples.std()
        assert ratio == pytest.approx(math.sqrt(2), rel=0.05)

    def test_common_mode_suppression(self, rng):
        fs, n = 900.0, 65536
        t = np.arange(n) / fs
        cm = 1e-9 * np.sin(TWO_PI * 77.0 * t)
        d = 10e-12 * np.sin(TWO_PI * 33.0 * t)
        ch1 = make_trace(cm + d / 2 + rng.normal(0, 1e-13, n))
        ch2 = make_trace(cm - d / 2 + rng.normal(0, 1e-13, n))
        diff = gradiometer_difference(ch1, ch2)
        spec1 = noise_spectrum(ch1)
        specd = noise_spectrum(diff)
        k77 = np.argmin(np.abs(spec1.freqs - 77.0))
        suppression_db = 20 * math.log10(
            spec1.amplitude[k77] / specd.amplitude[k77])
        assert suppression_db >= 40.0
        # the differential tone survives at full amplitude
        k33 = np.argmin(np.abs(specd.freqs - 33.0))
        assert specd.amplitude[k33] == pytest.approx(10e-12, rel=0.05)

    def test_mismatched_channels_rejected(self, rng):
        a = make_trace(rng.normal(size=512))
        b = make_trace(rng.normal(size=256))
        with pytest.raises(ValueError):
            gradiometer_difference(a, b)
        c = make_trace(rng.normal(size=512), fs=800.0)
        with pytest.raises(ValueError):
            gradiometer_difference(a, c)


class TestFluxGain:
    def test_discharge_slope_ratio(self):
        t = np.arange(65536) / 900.0
        with_fg = make_trace(-6.3e-9 * t + 1e-12 * np.sin(TWO_PI * 3 * t))
        without_fg = make_trace(-1.0e-9 * t + 1e-12 * np.sin(TWO_PI * 3 * t))
        _, s1, _ = detrend_linear(with_fg)
        _, s2, _ = detrend_linear(without_fg)
        assert flux_gain_from_slopes(s1, s2) == pytest.approx(6.3, rel=1e-6)

    def test_equal_slopes(self):
        assert flux_gain_from_slopes(-2e-9, -2e-9) == pytest.approx(1.0)

    def test_simulated_geometry_ratio(self):
        t = np.arange(8192) / 900.0
        fast = detrend_linear(make_trace(-14e-9 * t))[1]
        slow = detrend_linear(make_trace(-1e-9 * t))[1]
        assert flux_gain_from_slopes(fast, slow) == pytest.approx(14.0, rel=1e-9)

    def test_zero_reference_rejected(self):
        with pytest.raises(ZeroDivisionError):
            flux_gain_from_slopes(1.0, 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(8125)
