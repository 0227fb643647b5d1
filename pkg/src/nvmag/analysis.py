"""Measurement-trace analysis pipeline.

Linear detrending, single-sided amplitude spectra, noise-floor and
sensitivity extraction, calibration-tone recovery through lock-in
demodulation, gradiometer differencing, and flux-guide gain from
discharge slopes.

Amplitude convention: with the default rectangular window a coherent,
bin-centered tone of amplitude A appears as A in its bin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .lockin import LockinConfig, mix_and_filter
from .trace import TimeTrace, load_trace, save_trace  # noqa: F401  (re-exported)

TWO_PI = 2.0 * math.pi

WINDOWS = ("rectangular", "hann")


class BandError(ValueError):
    """Requested frequency band is empty or outside the spectrum."""


class UnresolvableToneError(ValueError):
    """Tone frequency below the spectral resolution of the record."""


def detrend_linear(trace: TimeTrace) -> tuple[TimeTrace, float, float]:
    """Remove the least-squares line; returns (residual, slope, intercept).

    The intercept refers to t = start_time.  Used both for
    discharge-ramp removal and for slope extraction.
    """
    if len(trace) < 3:
        raise ValueError("need at least 3 samples to detrend")
    t = trace.times - trace.start_time
    tc = t - t.mean()  # centered for conditioning
    v = trace.samples
    slope = float(np.dot(tc, v - v.mean()) / np.dot(tc, tc))
    intercept = float(v.mean() - slope * t.mean())
    residual = v - (slope * t + intercept)
    return trace.with_samples(residual), slope, intercept


@dataclass(frozen=True)
class NoiseSpectrum:
    """Single-sided amplitude spectrum of a uniformly sampled trace."""

    freqs: np.ndarray
    amplitude: np.ndarray
    resolution: float        # Hz, sample_rate / N
    measurement_time: float  # s, N / sample_rate
    units: str = "V"

    def band_mask(self, f_lo: float, f_hi: float) -> np.ndarray:
        return (self.freqs >= f_lo) & (self.freqs <= f_hi)

    def to_csv(self, path) -> None:
        col = "amplitude_t" if self.units == "T" else "amplitude_v"
        np.savetxt(path, np.column_stack([self.freqs, self.amplitude]),
                   delimiter=",", header=f"freq_hz,{col}", comments="",
                   fmt="%.17g")


def noise_spectrum(trace: TimeTrace, scalar_factor: float | None = None,
                   window: str = "rectangular") -> NoiseSpectrum:
    """Single-sided amplitude spectrum; optionally converted to tesla.

    ``scalar_factor`` (V/T) divides a volt trace into field units at
    reporting time.  The Hann window (amplitude-corrected) is available
    for broadband floors; the rectangular default preserves coherent
    bin-centered tone amplitudes exactly.
    """
    if window not in WINDOWS:
        raise ValueError(f"window must be one of {WINDOWS}")
    v = trace.samples
    n = v.size
    if window == "hann":
        w = np.hanning(n)
        spec = np.fft.rfft(v * w) / w.sum()
    else:
        spec = np.fft.rfft(v) / n
    amplitude = np.abs(spec)
    amplitude[1:] *= 2.0
    if n % 2 == 0:
        amplitude[-1] /= 2.0  # unpaired Nyquist bin
    freqs = np.fft.rfftfreq(n, 1.0 / trace.sample_rate)
    units = trace.units
    if scalar_factor is not None:
        if trace.units != "V":
            raise ValueError("scalar factor applies to volt traces")
        amplitude = amplitude / scalar_factor
        units = "T"
    return NoiseSpectrum(freqs=freqs, amplitude=amplitude,
                         resolution=trace.sample_rate / n,
                         measurement_time=trace.duration, units=units)


def min_detectable_field(spectrum: NoiseSpectrum,
                         band: tuple[float, float]) -> tuple[float, float]:
    """Noise floor and 1-Hz-normalized density over a band.

    floor: median bin amplitude in [band[0], band[1]] (median is robust
    against calibration-tone spikes); eta = floor * sqrt(measurement
    time).
    """
    mask = spectrum.band_mask(*band)
    if not np.any(mask):
        raise BandError(f"band {band} contains no spectrum bins")
    floor = float(np.median(spectrum.amplitude[mask]))
    eta = floor * math.sqrt(spectrum.measurement_time)
    return floor, eta


def _complex_baseband(trace: TimeTrace, carrier: float, cutoff: float,
                      filter_order: int) -> np.ndarray:
    """Filtered X + iY at the carrier; a tone m(t) sin(2 pi f_c t + phi)
    demodulates to m(t) exp(i phi)."""
    nyquist = trace.sample_rate / 2.0
    if carrier >= 0.9 * nyquist:
        raise ValueError(f"carrier {carrier:.4g} Hz too close to Nyquist {nyquist:.4g} Hz")
    if cutoff >= carrier:
        raise ValueError("cutoff must sit below the carrier")
    x, y = mix_and_filter(trace.samples, trace.sample_rate, carrier,
                          0.0, cutoff, filter_order, trace.start_time)
    return x + 1j * y


def demodulate_carrier(trace: TimeTrace, carrier: float,
                       cutoff: float = 49.0, filter_order: int = 4,
                       output: str = "auto_phase") -> TimeTrace:
    """Demodulate a sampled record at a modulation carrier.

    Unlike the general-purpose lock-in path this only requires the
    carrier to sit below Nyquist (the acquisition rate of a slow
    magnetometer record undersamples the carrier relative to the 10x
    rule).  ``output``: 'auto_phase' rotates the baseband onto the
    dominant phase and returns the in-phase channel (the instrument's
    phased output, where mixing artifacts such as a 150 Hz interferer
    demodulated at 182 Hz appear at 32 Hz); 'magnitude' returns |X+iY|.
    """
    if output not in ("auto_phase", "magnitude"):
        raise ValueError("output must be 'auto_phase' or 'magnitude'")
    z = _complex_baseband(trace, carrier, cutoff, filter_order)
    if output == "magnitude":
        return replace(trace, samples=np.abs(z))
    zc = z - z.mean()
    phi = 0.5 * np.angle(np.sum(zc * zc))
    return replace(trace, samples=(z * np.exp(-1j * phi)).real)


def recover_calibration_tones(trace: TimeTrace, carrier: float,
                              tone_freqs, config: LockinConfig | None = None,
                              ) -> np.ndarray:
    """Amplitudes of known test tones riding on a modulation carrier.

    The record is demodulated at the carrier (49 Hz cutoff, 4 cascaded
    sections by default), the filter settling is discarded, and each
    requested baseband frequency is read out by coherent projection of
    the settled complex baseband (insensitive to the carrier and tone
    phases).  Filter rolloff is not corrected: tones near the cutoff
    read low, as they do on the instrument.
    """
    tone_freqs = np.atleast_1d(np.asarray(tone_freqs, dtype=float))
    if config is None:
        config = LockinConfig(f_ref=carrier, cutoff=49.0, filter_order=4,
                              output="magnitude")
    z = _complex_baseband(trace, carrier, config.cutoff, config.filter_order)
    n_skip = min(int(config.settling_time * trace.sample_rate), len(z) // 2)
    v = z[n_skip:]
    t = trace.times[n_skip:]
    t_span = t[-1] - t[0]
    amplitudes = np.empty(tone_freqs.size)
    for i, f in enumerate(tone_freqs):
        if f <= 0 or f * t_span < 1.0:
            raise UnresolvableToneError(
                f"tone at {f:.4g} Hz below the resolution 1/{t_span:.4g} s"
            )
        ref = np.exp(-1j * TWO_PI * f * t)
        # the tone splits evenly between +-f in the complex baseband
        amplitudes[i] = abs(np.mean(v * ref)) + abs(np.mean(v * ref.conj()))
    return amplitudes


def gradiometer_difference(ch1: TimeTrace, ch2: TimeTrace) -> TimeTrace:
    """Per-sample channel difference ch1 - ch2.

    Common-mode signals cancel; with opposite-sign MW modulation on the
    two sensors a differential field adds.
    """
    if len(ch1) != len(ch2):
        raise ValueError(f"length mismatch: {len(ch1)} vs {len(ch2)}")
    if not math.isclose(ch1.sample_rate, ch2.sample_rate, rel_tol=1e-9):
        raise ValueError("sample-rate mismatch")
    return ch1.with_samples(ch1.samples - ch2.samples)


def flux_gain_from_slopes(slope_with_fg: float, slope_without_fg: float) -> float:
    """Flux-guide gain: ratio of detected discharge slopes."""
    if slope_without_fg == 0:
        raise ZeroDivisionError("reference slope is zero")
    return slope_with_fg / slope_without_fg
