"""CW-ODMR observables.

Analytic linewidth estimates, steady-state spectra, lock-in demodulated
spectra under FM/PM driving, scalar factor extraction, and the
magnetometer frequency response.

Frequency grids are MW offsets from resonance in Hz; the kinetics sees
the angular detuning 2 pi f.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from . import kinetics, lockin
from .constants import GAMMA_NV
from .kinetics import KineticsParams, rad_per_s
from .mwsignal import MWModulation, instantaneous_detuning
from .trace import TimeTrace

TWO_PI = 2.0 * math.pi


class LinewidthSingularityError(ZeroDivisionError):
    """Saturation term of the linewidth formula has a vanishing denominator."""


def cw_linewidth(gamma_1: float, gamma_2_star: float, gamma_p: float,
                 omega_r: float) -> float:
    """CW-ODMR linewidth estimate in Hz.

    (1/2pi) sqrt(G2^2 + omega_r^2 G2 / (2 gamma_1 + gamma_p)) with
    G2 = gamma_2_star + gamma_p (optical cycling adds dephasing at the
    pumping rate).  Rates in 1/s, omega_r in rad/s.
    """
    if min(gamma_1, gamma_2_star, gamma_p, omega_r) < 0:
        raise ValueError("all inputs must be >= 0")
    g2 = gamma_2_star + gamma_p
    denom = 2.0 * gamma_1 + gamma_p
    if omega_r > 0 and denom == 0:
        raise LinewidthSingularityError("2*gamma_1 + gamma_p = 0 with omega_r > 0")
    saturation = omega_r**2 * g2 / denom if omega_r > 0 else 0.0
    return math.sqrt(g2**2 + saturation) / TWO_PI


def pulsed_odmr_linewidth(t2_star: float) -> float:
    """Pulsed-ODMR linewidth limit 2 sqrt(ln 2) / (pi T2*) in Hz."""
    if t2_star <= 0:
        raise ValueError("t2_star must be positive")
    return 2.0 * math.sqrt(math.log(2.0)) / (math.pi * t2_star)


@dataclass(frozen=True)
class OdmrSpectrum:
    """Spectrum on a strictly increasing frequency-offset grid (Hz).

    ``signal`` is the fluorescence (or demodulated) level in model
    units; ``fwhm``/``contrast``/``center`` come from a Lorentzian fit
    where available.
    """

    freqs: np.ndarray
    signal: np.ndarray
    fwhm: float | None = None
    contrast: float | None = None
    center: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "freqs", np.asarray(self.freqs, dtype=float))
        object.__setattr__(self, "signal", np.asarray(self.signal, dtype=float))
        if self.freqs.ndim != 1 or self.freqs.size != self.signal.size:
            raise ValueError("freqs and signal must be 1-d and equal length")
        if np.any(np.diff(self.freqs) <= 0):
            raise ValueError("freqs must be strictly increasing")

    def to_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([self.freqs, self.signal]),
                   delimiter=",", header="freq_hz,signal", comments="",
                   fmt="%.17g")


def _lorentzian_dip(f, base, depth, center, hwhm):
    return base - depth * hwhm**2 / (hwhm**2 + (f - center) ** 2)


def fit_lorentzian_dip(freqs: np.ndarray, signal: np.ndarray):
    """Fit base - depth * L(f); returns (base, depth, center, hwhm)."""
    base0 = float(signal.max())
    depth0 = float(base0 - signal.min())
    center0 = float(freqs[np.argmin(signal)])
    span = freqs[-1] - freqs[0]
    hwhm0 = max(span / 20.0, (freqs[1] - freqs[0]))
    with warnings.catch_warnings():
        # parameter covariance is unused; tiny dips make it ill conditioned
        warnings.simplefilter("ignore", OptimizeWarning)
        popt, _ = curve_fit(_lorentzian_dip, freqs, signal,
                            p0=[base0, depth0, center0, hwhm0],
                            maxfev=20000)
    popt[3] = abs(popt[3])
    return popt


def cw_spectrum(params: KineticsParams, freq_grid: np.ndarray,
                fit: bool = True) -> OdmrSpectrum:
    """Steady-state fluorescence versus MW offset.

    The grid must span at least 4x the expected linewidth so the fit
    sees the baseline.  Contrast is the fitted dip depth over the
    off-resonance level.
    """
    freq_grid = np.asarray(freq_grid, dtype=float)
    expected = cw_linewidth(params.gamma_1, params.gamma_2_star,
                            params.gamma_p, params.omega_r)
    span = freq_grid[-1] - freq_grid[0]
    if span < 4.0 * expected:
        raise ValueError(
            f"grid span {span:.4g} Hz below 4 x expected linewidth {expected:.4g} Hz"
        )
    signal = np.empty(freq_grid.size)
    for i, f in enumerate(freq_grid):
        ss = kinetics.steady_state(replace(params, delta=rad_per_s(f)))
        signal[i] = ss.fluorescence
    if not fit or params.omega_r == 0:
        contrast = 0.0 if np.ptp(signal) < 1e-12 * abs(signal).max() else None
        return OdmrSpectrum(freq_grid, signal, fwhm=None, contrast=contrast)
    base, depth, center, hwhm = fit_lorentzian_dip(freq_grid, signal)
    return OdmrSpectrum(freq_grid, signal, fwhm=2.0 * hwhm,
                        contrast=depth / base, center=center)


def scalar_factor(spectrum: OdmrSpectrum) -> float:
    """Maximum |dS/df| converted to response per tesla via gamma_NV.

    Returns 0 (with a warning) for a flat spectrum.
    """
    if spectrum.freqs.size < 3:
        raise ValueError("need at least 3 points around resonance")
    slope = np.gradient(spectrum.signal, spectrum.freqs)
    peak = float(np.abs(slope).max())
    if peak == 0.0 or np.ptp(spectrum.signal) <= 1e-15 * max(1.0, np.abs(spectrum.signal).max()):
        warnings.warn("flat spectrum: scalar factor is zero", RuntimeWarning,
                      stacklevel=2)
        return 0.0
    return peak * GAMMA_NV


def _modulated_params(params: KineticsParams, mod: MWModulation,
                      carrier_offset_hz: float) -> KineticsParams:
    def delta(t):
        return rad_per_s(carrier_offset_hz + float(instantaneous_detuning(mod, t)))

    return replace(params, delta=delta)


def _demodulated_point(params: KineticsParams, mod: MWModulation,
                       carrier_offset_hz: float, settle_periods: float,
                       demod_periods: int, samples_per_period: int
                       ) -> complex:
    """Settled lock-in (X + iY) of the fluorescence under modulated driving."""
    period = 1.0 / mod.f_m
    # start from the steady state at the carrier offset: the remaining
    # transient decays at the magnetometer response rate
    y0 = kinetics.steady_state(replace(params, delta=rad_per_s(carrier_offset_hz)))
    p = _modulated_params(params, mod, carrier_offset_hz)
    config = lockin.LockinConfig(f_ref=mod.f_m, phase=0.0, cutoff=mod.f_m / 4.0,
                                 filter_order=1, output="in_phase")
    filter_settle = config.settling_time
    duration = settle_periods * period + filter_settle + demod_periods * period
    n = int(round(duration / period * samples_per_period))
    times = np.arange(n) * (period / samples_per_period)
    traj = kinetics.integrate(y0, p, float(times[-1]), sample_times=times)
    trace = TimeTrace(traj.fluorescence, sample_rate=mod.f_m * samples_per_period,
                      units="arb")
    x = lockin.demodulate(trace, config).samples
    y = lockin.demodulate(trace, replace(config, output="quadrature")).samples
    n_avg = demod_periods * samples_per_period
    return complex(x[-n_avg:].mean(), y[-n_avg:].mean())


def lockin_odmr_spectrum(params: KineticsParams, mod: MWModulation,
                         freq_grid: np.ndarray, settle_periods: float = 3.0,
                         demod_periods: int = 4, samples_per_period: int = 24,
                         ) -> OdmrSpectrum:
    """Lock-in detected ODMR spectrum under FM/PM modulated driving.

    The kinetics is driven with the instantaneous detuning of ``mod``
    around each carrier offset and demodulated at f_m.  All demodulated
    points share one global phase rotation (chosen to maximize the
    in-phase power), giving the dispersive profile with its sign
    structure intact.  The output is scaled by 2 so that in the
    adiabatic small-deviation limit it equals the static two-point
    difference S(f - f_d) - S(f + f_d).
    """
    if mod.kind not in ("FM", "PM"):
        raise ValueError("lock-in ODMR needs an FM or PM modulation")
    freq_grid = np.asarray(freq_grid, dtype=float)
    span = freq_grid[-1] - freq_grid[0]
    if mod.f_m >= span:
        raise ValueError(
            f"f_m = {mod.f_m:.4g} Hz not below the grid span {span:.4g} Hz: "
            "sweep would be meaningless"
        )
    points = np.array([
        _demodulated_point(params, mod, f, settle_periods, demod_periods,
                           samples_per_period)
        for f in freq_grid
    ])
    # global phase alignment: rotate so the in-phase channel carries the signal
    phi = 0.5 * math.atan2(np.sum(points.imag * points.real) * 2.0,
                           np.sum(points.real**2 - points.imag**2))
    rotated = points * np.exp(-1j * phi)
    if np.abs(rotated.real).max() < np.abs(rotated.imag).max():
        rotated *= np.exp(-1j * math.pi / 2.0)
    signal = 2.0 * rotated.real  # equivalent static-difference scale
    # fix overall sign: dispersive profile rises on the low-frequency side
    if signal[np.argmax(freq_grid > (freq_grid[0] + span / 4))] < 0:
        signal = -signal
    return OdmrSpectrum(freq_grid, signal)


@dataclass(frozen=True)
class FrequencyResponse:
    """Demodulated contrast magnitude versus modulation frequency."""

    f_m: np.ndarray
    magnitude: np.ndarray
    bandwidth_3db: float
    carrier_offset: float  # probe detuning used (Hz)

    @property
    def normalized(self) -> np.ndarray:
        return self.magnitude / self.magnitude[0]


def _first_harmonic(params: KineticsParams, f_m: float, f_d: float,
                    carrier_offset_hz: float, settle_periods: float,
                    demod_periods: int, samples_per_period: int) -> float:
    """|first harmonic| of the fluorescence under sinusoidal detuning."""
    period = 1.0 / f_m
    y0 = kinetics.steady_state(replace(params, delta=rad_per_s(carrier_offset_hz)))
    base = rad_per_s(carrier_offset_hz)
    dev = TWO_PI * f_d
    w = TWO_PI * f_m
    p = replace(params, delta=lambda t: base + dev * math.cos(w * t))
    # settle at least a few response times of the slow kinetics
    settle = max(settle_periods * period, 2.5e-3)
    settle = math.ceil(settle / period) * period
    duration = settle + demod_periods * period
    n = int(round(duration * f_m * samples_per_period))
    times = np.arange(n) * (period / samples_per_period)
    traj = kinetics.integrate(y0, p, float(times[-1]), sample_times=times)
    n_avg = demod_periods * samples_per_period
    v = traj.fluorescence[-n_avg:]
    t = times[-n_avg:]
    z = 2.0 * np.mean(v * np.exp(-1j * w * t))
    return float(abs(z))


def frequency_response(params: KineticsParams, f_m_list: np.ndarray,
                       f_d: float = 1e3, carrier_offset_hz: float | None = None,
                       settle_periods: float = 3.0, demod_periods: int = 4,
                       samples_per_period: int = 24) -> FrequencyResponse:
    """Magnetometer response: demodulated signal magnitude vs f_m.

    The probe sits at the maximum-slope point of the static line (unless
    ``carrier_offset_hz`` overrides it) with a small frequency deviation
    ``f_d``.  Reports the -3 dB modulation frequency by log-log
    interpolation of the magnitude curve.
    """
    f_m_list = np.asarray(f_m_list, dtype=float)
    if np.any(f_m_list <= 0):
        raise ValueError("modulation frequencies must be positive")
    if carrier_offset_hz is None:
        width = cw_linewidth(params.gamma_1, params.gamma_2_star,
                             params.gamma_p, params.omega_r)
        grid = np.linspace(0.0, 6.0 * width, 121)
        line = np.empty(grid.size)
        for i, f in enumerate(grid):
            line[i] = kinetics.steady_state(replace(params, delta=rad_per_s(f))).fluorescence
        slope = np.gradient(line, grid)
        carrier_offset_hz = float(grid[np.argmax(np.abs(slope))])
    mags = np.array([
        _first_harmonic(params, f, f_d, carrier_offset_hz, settle_periods,
                        demod_periods, samples_per_period)
        for f in f_m_list
    ])
    bandwidth = _bandwidth_3db(f_m_list, mags)
    return FrequencyResponse(f_m=f_m_list, magnitude=mags,
                             bandwidth_3db=bandwidth,
                             carrier_offset=carrier_offset_hz)


def _bandwidth_3db(f_m: np.ndarray, magnitude: np.ndarray) -> float:
    """-3 dB crossing of the response, log-log interpolated."""
    ratio = magnitude / magnitude[0]
    target = 1.0 / math.sqrt(2.0)
    below = np.where(ratio < target)[0]
    if below.size == 0:
        return float("inf")
    j = below[0]
    if j == 0:
        return float(f_m[0])
    x = np.log([ratio[j], ratio[j - 1]])
    y = np.log([f_m[j], f_m[j - 1]])
    return float(math.exp(np.interp(math.log(target), x, y)))
