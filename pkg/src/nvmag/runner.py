"""Experiment configuration and orchestration.

A run is described by a flat INI file (one section per module area),
a mode, a seed, and an output directory.  Every artifact carries the
resolved configuration in its header; identical config + seed produce
byte-identical CSV outputs.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, analysis, kinetics, lockin, mwsignal, odmr, sensitivity
from .constants import DR_ENHANCEMENT, HYPERFINE_ENHANCEMENT
from .trace import TimeTrace, load_trace

MODES = ("simulate-odmr", "simulate-ramsey", "simulate-repolarization",
         "optimize", "analyze", "calibrate", "gradiometer")

TWO_PI = 2.0 * math.pi


class ConfigError(ValueError):
    """Invalid experiment configuration; collects field-level messages."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" +
                         "\n".join(f"  - {p}" for p in self.problems))


def max_threads() -> int:
    """Worker cap from NVMAG_THREADS (default: all cores)."""
    raw = os.environ.get("NVMAG_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def parallel_map(fn, items):
    """Order-preserving parallel map over a thread pool."""
    items = list(items)
    workers = min(max_threads(), max(len(items), 1))
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass
class ExperimentConfig:
    """Parsed and validated experiment description."""

    mode: str
    seed: int = 0
    sections: dict = field(default_factory=dict)
    source_text: str = ""

    @classmethod
    def from_file(cls, path, mode: str | None = None,
                  seed: int | None = None) -> "ExperimentConfig":
        parser = configparser.ConfigParser()
        text = Path(path).read_text()
        parser.read_string(text)
        sections = {name: dict(parser.items(name)) for name in parser.sections()}
        run = sections.get("run", {})
        resolved_mode = mode or run.get("mode", "")
        resolved_seed = seed if seed is not None else int(run.get("seed", "0"))
        cfg = cls(mode=resolved_mode, seed=resolved_seed, sections=sections,
                  source_text=text)
        cfg.validate()
        return cfg

    def get(self, section: str, key: str, default=None):
        return self.sections.get(section, {}).get(key, default)

    def get_float(self, section: str, key: str, default=None):
        raw = self.get(section, key)
        if raw is None:
            return default
        return float(raw)

    def get_int(self, section: str, key: str, default=None):
        raw = self.get(section, key)
        if raw is None:
            return default
        return int(raw)

    def get_bool(self, section: str, key: str, default=False):
        raw = self.get(section, key)
        if raw is None:
            return default
        return str(raw).strip().lower() in ("1", "true", "yes", "on")

    def validate(self) -> None:
        problems = []
        if not self.mode:
            problems.append("run.mode: missing (or pass the mode on the command line)")
        elif self.mode not in MODES:
            problems.append(f"run.mode: unknown mode {self.mode!r}; choose from {MODES}")
        checks = {
            ("kinetics", "gamma_p_mhz"): (0.0, 1e3),
            ("kinetics", "t1_ms"): (1e-6, 1e6),
            ("kinetics", "t2_star_us"): (1e-6, 1e9),
            ("kinetics", "rabi_khz"): (0.0, 1e6),
            ("modulation", "f_m_hz"): (0.0, 1e9),
            ("optimize", "s_points"): (1, 2000),
            ("optimize", "rabi_points"): (1, 2000),
        }
        for (section, key), (lo, hi) in checks.items():
            raw = self.get(section, key)
            if raw is None:
                continue
            try:
                value = float(raw)
            except ValueError:
                problems.append(f"{section}.{key}: not a number ({raw!r})")
                continue
            if not lo <= value <= hi:
                problems.append(f"{section}.{key}: {value} outside [{lo}, {hi}]")
        if self.mode == "analyze":
            if not self.get("analyze", "input") and "synthetic" not in self.sections:
                problems.append("analyze.input: missing (no [synthetic] section either)")
        if self.mode == "calibrate":
            if self.get_float("calibrate", "carrier_hz", 182.0) <= 0:
                problems.append("calibrate.carrier_hz: must be positive")
            if not self.get("calibrate", "input") and "synthetic" not in self.sections:
                problems.append("calibrate.input: missing (no [synthetic] section either)")
        if self.mode == "gradiometer":
            has_inputs = self.get("gradiometer", "input1") and self.get("gradiometer", "input2")
            if not has_inputs and "synthetic" not in self.sections:
                problems.append("gradiometer.input1/input2: missing (no [synthetic] section either)")
        if problems:
            raise ConfigError(problems)

    def kinetics_params(self) -> kinetics.KineticsParams:
        gamma_p = self.get_float("kinetics", "gamma_p_mhz", 0.026) * 1e6
        t1 = self.get_float("kinetics", "t1_ms", 6.0) * 1e-3
        t2s = self.get_float("kinetics", "t2_star_us", 8.5) * 1e-6
        rabi = self.get_float("kinetics", "rabi_khz", 17.0) * 1e3
        return kinetics.KineticsParams(gamma_p=gamma_p, gamma_1=1.0 / t1,
                                       gamma_2_star=1.0 / t2s,
                                       omega_r=TWO_PI * rabi)

    def modulation(self) -> mwsignal.MWModulation | None:
        if "modulation" not in self.sections:
            return None
        kind = self.get("modulation", "kind", "PM").upper()
        f0 = self.get_float("modulation", "f0_hz", 2.87e9)
        f_m = self.get_float("modulation", "f_m_hz", 9e3)
        if kind == "FM":
            return mwsignal.fm(f0, f_m, self.get_float("modulation", "f_d_hz", 18e3))
        if kind == "PM":
            return mwsignal.pm(f0, f_m, self.get_float("modulation", "phi_d", 2.0))
        raise ConfigError([f"modulation.kind: unsupported {kind!r}"])

    def config_hash(self) -> str:
        # canonical: normalized sections with mode/seed resolved, so a
        # round-tripped config hashes identically
        return hashlib.sha256(self.resolved_text().encode()).hexdigest()[:16]

    def header_lines(self) -> list[str]:
        lines = [f"# nvmag {__version__} mode={self.mode} seed={self.seed} "
                 f"config_sha={self.config_hash()}"]
        for section in sorted(self.sections):
            for key in sorted(self.sections[section]):
                lines.append(f"# {section}.{key} = {self.sections[section][key]}")
        return lines

    def resolved_text(self) -> str:
        """Normalized INI with the mode and seed resolved; reloading it
        reproduces the run."""
        sections = {name: dict(body) for name, body in self.sections.items()}
        run = sections.setdefault("run", {})
        run["mode"] = self.mode
        run["seed"] = str(self.seed)
        chunks = []
        for name in sorted(sections):
            chunks.append(f"[{name}]")
            for key in sorted(sections[name]):
                chunks.append(f"{key} = {sections[name][key]}")
            chunks.append("")
        return "\n".join(chunks)


@dataclass
class RunResult:
    mode: str
    report: dict
    artifacts: list


def _write_csv(path: Path, config: ExperimentConfig, header: str,
               rows: np.ndarray) -> None:
    buf = io.StringIO()
    np.savetxt(buf, np.atleast_2d(rows), delimiter=",", header=header,
               comments="", fmt="%.17g")
    path.write_text("\n".join(config.header_lines()) + "\n" + buf.getvalue())


def _svg_metadata(config: ExperimentConfig) -> dict:
    return {"Date": None, "Description": "\n".join(config.header_lines())}


def _plot(path: Path, config: ExperimentConfig, x, y, xlabel: str,
          ylabel: str, logx: bool = False, logy: bool = False) -> None:
    import matplotlib
    matplotlib.use("svg", force=True)
    matplotlib.rcParams["svg.hashsalt"] = "nvmag"
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(x, y, lw=1.0)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    fig.savefig(path, metadata=_svg_metadata(config))
    plt.close(fig)


def _plot_map(path: Path, config: ExperimentConfig, s_grid, omega_grid,
              db_map) -> None:
    import matplotlib
    matplotlib.use("svg", force=True)
    matplotlib.rcParams["svg.hashsalt"] = "nvmag"
    import matplotlib.pyplot as plt
    from matplotlib.colors import LogNorm
    fig, ax = plt.subplots(figsize=(5, 3.6))
    mesh = ax.pcolormesh(omega_grid / TWO_PI / 1e3, s_grid, db_map * 1e12,
                         norm=LogNorm(), shading="auto")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("Rabi frequency (kHz)")
    ax.set_ylabel("saturation fraction s")
    fig.colorbar(mesh, ax=ax, label="shot noise (pT/sqrt(Hz))")
    fig.tight_layout()
    fig.savefig(path, metadata=_svg_metadata(config))
    plt.close(fig)


def synthesize_trace(config: ExperimentConfig, rng: np.random.Generator,
                     channel: int = 0) -> TimeTrace:
    """Seeded synthetic magnetometer record from the [synthetic] section.

    White Gaussian noise (PCG64 generator) plus optional carrier-borne
    calibration tones, a common-mode tone, and a discharge ramp.
    """
    sec = "synthetic"
    fs = config.get_float(sec, "sample_rate_hz", 900.0)
    n = config.get_int(sec, "n_points", 65536)
    t = np.arange(n) / fs
    v = rng.normal(0.0, config.get_float(sec, "noise_sigma_t", 2e-12), n)
    carrier = config.get_float(sec, "carrier_hz", 0.0)
    tone_freqs = [float(x) for x in
                  str(config.get(sec, "tone_freqs_hz", "")).split(",") if x]
    amp = config.get_float(sec, "tone_amplitude_t", 150e-12)
    if tone_freqs:
        m = sum(amp * np.cos(TWO_PI * f * t + 0.1 * i)
                for i, f in enumerate(tone_freqs))
        v = v + (m * np.sin(TWO_PI * carrier * t) if carrier > 0 else m)
    cm_freq = config.get_float(sec, "common_mode_hz", 0.0)
    if cm_freq > 0:
        v = v + config.get_float(sec, "common_mode_amplitude_t", 0.0) * np.sin(
            TWO_PI * cm_freq * t)
    diff_freq = config.get_float(sec, "differential_hz", 0.0)
    if diff_freq > 0:
        sign = 1.0 if channel == 0 else -1.0
        v = v + sign * 0.5 * config.get_float(sec, "differential_amplitude_t", 0.0) \
            * np.sin(TWO_PI * diff_freq * t)
    v = v + config.get_float(sec, "ramp_t_per_s", 0.0) * t
    return TimeTrace(v, fs, units="T")


def _load_or_synthesize(config: ExperimentConfig, section: str, key: str,
                        rng: np.random.Generator, channel: int = 0) -> TimeTrace:
    path = config.get(section, key)
    if path:
        return load_trace(path)
    return synthesize_trace(config, rng, channel)


def run(config: ExperimentConfig, out_dir) -> RunResult:
    """Execute one experiment mode; writes artifacts into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(config.seed)
    handlers = {
        "simulate-odmr": _run_simulate_odmr,
        "simulate-ramsey": _run_simulate_ramsey,
        "simulate-repolarization": _run_simulate_repolarization,
        "optimize": _run_optimize,
        "analyze": _run_analyze,
        "calibrate": _run_calibrate,
        "gradiometer": _run_gradiometer,
    }
    report, artifacts = handlers[config.mode](config, out, rng)
    report = {"status": "ok", "mode": config.mode, "seed": config.seed,
              "version": __version__, "config_sha": config.config_hash(),
              **report}
    report_path = out / "report.json"
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    summary_path = out / "summary.txt"
    summary_path.write_text(summarize(report) + "\n")
    config_path = out / "config.ini"
    config_path.write_text(config.resolved_text())
    artifacts += [report_path, summary_path, config_path]
    return RunResult(mode=config.mode, report=report, artifacts=artifacts)


def _run_simulate_odmr(config: ExperimentConfig, out: Path, rng):
    from dataclasses import replace

    params = config.kinetics_params()
    span = config.get_float("odmr", "span_khz", 300.0) * 1e3
    points = config.get_int("odmr", "points", 81)
    grid = np.linspace(-span / 2, span / 2, points)
    signal = np.asarray(parallel_map(
        lambda f: kinetics.steady_state(
            replace(params, delta=TWO_PI * f)).fluorescence,
        grid))
    if params.omega_r > 0:
        base, depth, center, hwhm = odmr.fit_lorentzian_dip(grid, signal)
        fitted = odmr.OdmrSpectrum(grid, signal, fwhm=2 * hwhm,
                                   contrast=depth / base, center=center)
        sf = odmr.scalar_factor(fitted)
    else:
        fitted = odmr.OdmrSpectrum(grid, signal, contrast=0.0)
        sf = 0.0
    _write_csv(out / "odmr_spectrum.csv", config, "freq_hz,signal",
               np.column_stack([fitted.freqs, fitted.signal]))
    _plot(out / "odmr_spectrum.svg", config, fitted.freqs / 1e3, fitted.signal,
          "MW offset (kHz)", "fluorescence (arb)")
    artifacts = [out / "odmr_spectrum.csv", out / "odmr_spectrum.svg"]
    report = {"fwhm_hz": fitted.fwhm, "contrast": fitted.contrast,
              "scalar_factor_per_t": sf,
              "formula_linewidth_hz": odmr.cw_linewidth(
                  params.gamma_1, params.gamma_2_star, params.gamma_p,
                  params.omega_r)}
    mod = config.modulation()
    if mod is not None and config.get_bool("odmr", "lockin", False):
        lspec = odmr.lockin_odmr_spectrum(params, mod, grid)
        _write_csv(out / "odmr_lockin_spectrum.csv", config, "freq_hz,signal",
                   np.column_stack([lspec.freqs, lspec.signal]))
        _plot(out / "odmr_lockin_spectrum.svg", config, lspec.freqs / 1e3, lspec.signal,
              "MW offset (kHz)", "demodulated signal (arb)")
        artifacts += [out / "odmr_lockin_spectrum.csv",
                      out / "odmr_lockin_spectrum.svg"]
        report["lockin_peak_to_peak"] = float(np.ptp(lspec.signal))
    return report, artifacts


def _run_simulate_ramsey(config: ExperimentConfig, out: Path, rng):
    params = config.kinetics_params()
    if params.omega_r <= 0:
        raise ConfigError(["kinetics.rabi_khz: must be positive for simulate-ramsey"])
    tau_max = config.get_float("ramsey", "tau_max_us", 8.0) * 1e-6
    points = config.get_int("ramsey", "points", 120)
    hyperfine = config.get_bool("ramsey", "hyperfine", True)
    continuous = config.get_bool("ramsey", "continuous", True)
    detunings = None if hyperfine else [0.0]
    trace = kinetics.simulate_fid(params, tau_max, hyperfine_detunings=detunings,
                                  continuous_excitation=continuous,
                                  n_points=points)
    _write_csv(out / "fid.csv", config, "time_s,value_v",
               np.column_stack([trace.times, trace.samples]))
    _plot(out / "fid.svg", config, trace.times * 1e6, trace.samples,
          "free evolution time (us)", "readout fluorescence (arb)")
    return ({"tau_max_s": tau_max, "points": points,
             "signal_span": float(np.ptp(trace.samples))},
            [out / "fid.csv", out / "fid.svg"])


def _run_simulate_repolarization(config: ExperimentConfig, out: Path, rng):
    params = config.kinetics_params()
    duration = config.get_float("repolarization", "duration_ms", 1.0) * 1e-3
    trace = kinetics.simulate_repolarization(params, duration)
    _write_csv(out / "repolarization.csv", config, "time_s,value_v",
               np.column_stack([trace.times, trace.samples]))
    _plot(out / "repolarization.svg", config, trace.times * 1e3, trace.samples,
          "time (ms)", "fluorescence (arb)")
    s = trace.samples
    # time constant of the slow polarization recovery, measured after the
    # fast optical filling (excited states and singlet reach quasi-steady
    # levels within a few singlet lifetimes)
    t_fast = 3.0 / (params.r_81 + params.r_82 + params.r_83)
    i0 = min(int(np.searchsorted(trace.times, t_fast)), len(s) - 2)
    frac = (s - s[i0]) / (s[-1] - s[i0])
    i63 = i0 + int(np.searchsorted(frac[i0:], 0.632))
    return ({"duration_s": duration,
             "recovery_time_s": float(trace.times[min(i63, len(s) - 1)])},
            [out / "repolarization.csv", out / "repolarization.svg"])


def _run_optimize(config: ExperimentConfig, out: Path, rng):
    t1 = config.get_float("optimize", "t1_ms", 6.0) * 1e-3
    t2s = config.get_float("optimize", "t2_star_us", 8.5) * 1e-6
    s_grid = np.logspace(math.log10(config.get_float("optimize", "s_min", 1e-5)),
                         math.log10(config.get_float("optimize", "s_max", 5e-3)),
                         config.get_int("optimize", "s_points", 50))
    om_grid = TWO_PI * np.logspace(
        math.log10(config.get_float("optimize", "rabi_min_khz", 3.0) * 1e3),
        math.log10(config.get_float("optimize", "rabi_max_khz", 150.0) * 1e3),
        config.get_int("optimize", "rabi_points", 50))
    result = sensitivity.optimize_cw(t1, t2s, s_grid, om_grid)
    rows = []
    for i, s in enumerate(result.s_grid):
        for j, om in enumerate(result.omega_grid):
            rows.append((s, om / TWO_PI, result.delta_b_map[i, j]))
    _write_csv(out / "sensitivity_map.csv", config, "s,omega_r_hz,delta_b_tesla",
               np.asarray(rows))
    _plot_map(out / "sensitivity_map.svg", config, result.s_grid, result.omega_grid,
              result.delta_b_map)
    eta = result.delta_b  # 1 s measurement
    report = {
        "s_opt": result.s_opt,
        "omega_r_opt_hz": result.omega_r_opt_hz,
        "delta_b_tesla": result.delta_b,
        "delta_b_enhanced_tesla": result.delta_b_enhanced,
        "eta_t_per_sqrt_hz": eta,
        "eta_v_t_mm32_per_sqrt_hz": sensitivity.volume_normalized(
            eta, config.get_float("optimize", "volume_mm3", 0.125)),
        "contrast": result.contrast,
        "linewidth_hz": result.linewidth,
        "photon_rate_hz": result.photon_rate,
        "hyperfine_factor": HYPERFINE_ENHANCEMENT,
        "dr_factor": DR_ENHANCEMENT,
        "fitted_model_constants": result.fitted_constants,
    }
    return report, [out / "sensitivity_map.csv", out / "sensitivity_map.svg"]


def _run_analyze(config: ExperimentConfig, out: Path, rng):
    trace = _load_or_synthesize(config, "analyze", "input", rng)
    detrended = config.get_bool("analyze", "detrend", True)
    slope = 0.0
    if detrended:
        trace, slope, _ = analysis.detrend_linear(trace)
    sf_v_per_nt = config.get_float("analyze", "scalar_factor_v_per_nt")
    scalar = sf_v_per_nt * 1e9 if sf_v_per_nt else None
    spectrum = analysis.noise_spectrum(
        trace, scalar_factor=scalar,
        window=config.get("analyze", "window", "rectangular"))
    band = (config.get_float("analyze", "band_lo_hz", 20.0),
            config.get_float("analyze", "band_hi_hz", 200.0))
    floor, eta = analysis.min_detectable_field(spectrum, band)
    col = "amplitude_t" if spectrum.units == "T" else "amplitude_v"
    _write_csv(out / "noise_spectrum.csv", config, f"freq_hz,{col}",
               np.column_stack([spectrum.freqs, spectrum.amplitude]))
    _plot(out / "noise_spectrum.svg", config, spectrum.freqs[1:], spectrum.amplitude[1:],
          "frequency (Hz)", f"amplitude ({spectrum.units})", logx=True, logy=True)
    report = {"noise_floor": floor, "eta_per_sqrt_hz": eta,
              "band_hz": list(band), "units": spectrum.units,
              "measurement_time_s": spectrum.measurement_time,
              "resolution_hz": spectrum.resolution,
              "detrend_slope_per_s": slope}
    return report, [out / "noise_spectrum.csv", out / "noise_spectrum.svg"]


def _run_calibrate(config: ExperimentConfig, out: Path, rng):
    trace = _load_or_synthesize(config, "calibrate", "input", rng)
    carrier = config.get_float("calibrate", "carrier_hz", 182.0)
    tones = [float(x) for x in
             str(config.get("calibrate", "tones_hz", "2,5,10")).split(",")]
    cutoff = config.get_float("calibrate", "cutoff_hz", 49.0)
    lock = lockin.LockinConfig(f_ref=carrier, cutoff=cutoff, filter_order=4,
                               output="magnitude")
    amplitudes = analysis.recover_calibration_tones(trace, carrier, tones, lock)
    baseband = analysis.demodulate_carrier(trace, carrier, cutoff=cutoff)
    _write_csv(out / "calibration_baseband.csv", config, "time_s,value_t",
               np.column_stack([baseband.times, baseband.samples]))
    _plot(out / "calibration_baseband.svg", config, baseband.times, baseband.samples,
          "time (s)", "demodulated field (T)")
    report = {"carrier_hz": carrier,
              "tones": [{"freq_hz": f, "amplitude_t": float(a)}
                        for f, a in zip(tones, amplitudes)]}
    return report, [out / "calibration_baseband.csv",
                    out / "calibration_baseband.svg"]


def _run_gradiometer(config: ExperimentConfig, out: Path, rng):
    ch1 = _load_or_synthesize(config, "gradiometer", "input1", rng, channel=0)
    ch2 = _load_or_synthesize(config, "gradiometer", "input2", rng, channel=1)
    diff = analysis.gradiometer_difference(ch1, ch2)
    spec1 = analysis.noise_spectrum(ch1)
    specd = analysis.noise_spectrum(diff)
    band = (config.get_float("gradiometer", "band_lo_hz", 20.0),
            config.get_float("gradiometer", "band_hi_hz", 200.0))
    floor1, _ = analysis.min_detectable_field(spec1, band)
    floord, etad = analysis.min_detectable_field(specd, band)
    _write_csv(out / "gradiometer_spectrum.csv", config, "freq_hz,amplitude_t",
               np.column_stack([specd.freqs, specd.amplitude]))
    _plot(out / "gradiometer_spectrum.svg", config, specd.freqs[1:], specd.amplitude[1:],
          "frequency (Hz)", "amplitude (T)", logx=True, logy=True)
    report = {"single_channel_floor": floor1, "difference_floor": floord,
              "difference_eta_per_sqrt_hz": etad, "band_hz": list(band),
              "floor_ratio": floord / floor1 if floor1 else None}
    return report, [out / "gradiometer_spectrum.csv",
                    out / "gradiometer_spectrum.svg"]


def summarize(report: dict) -> str:
    """Human-readable one-paragraph summary of a run report."""
    if not report or "mode" not in report:
        return "status: " + report.get("status", "empty")
    mode = report["mode"]
    lines = [f"mode: {mode} (seed {report.get('seed')}, "
             f"config {report.get('config_sha')})"]
    if mode == "optimize":
        lines.append(
            f"optimum: s = {report['s_opt']:.3g}, Rabi = "
            f"{report['omega_r_opt_hz'] / 1e3:.1f} kHz, shot noise = "
            f"{report['delta_b_tesla'] * 1e12:.3g} pT/sqrt(Hz) single line, "
            f"{report['delta_b_enhanced_tesla'] * 1e12:.3g} pT/sqrt(Hz) with "
            f"hyperfine and DR factors")
        lines.append(f"fitted model constants: {report['fitted_model_constants']}")
    elif mode == "analyze":
        unit = "T" if report["units"] == "T" else "V"
        lines.append(
            f"noise floor {report['noise_floor']:.3g} {unit} over "
            f"{report['band_hz'][0]:g}-{report['band_hz'][1]:g} Hz, "
            f"eta = {report['eta_per_sqrt_hz']:.3g} {unit}/sqrt(Hz) "
            f"({report['measurement_time_s']:.1f} s record, resolution "
            f"{report['resolution_hz'] * 1e3:.2f} mHz)")
    elif mode == "calibrate":
        for tone in report["tones"]:
            lines.append(f"tone {tone['freq_hz']:g} Hz: recovered "
                         f"{tone['amplitude_t'] * 1e12:.1f} pT")
    elif mode == "gradiometer":
        lines.append(
            f"difference floor {report['difference_floor']:.3g} T "
            f"(single channel {report['single_channel_floor']:.3g} T, "
            f"ratio {report['floor_ratio']:.2f})")
    elif mode in ("simulate-odmr", "simulate-ramsey", "simulate-repolarization"):
        for key in ("fwhm_hz", "contrast", "scalar_factor_per_t",
                    "recovery_time_s", "signal_span"):
            if key in report and report[key] is not None:
                lines.append(f"{key}: {report[key]:.6g}")
    return "\n".join(lines)


def emit_report(results: dict | None) -> tuple[str, str]:
    """Machine-readable JSON plus a text summary for arbitrary results."""
    if not results:
        payload = {"status": "empty"}
        return json.dumps(payload, indent=2, sort_keys=True), "status: empty"
    return json.dumps(results, indent=2, sort_keys=True), summarize(results)
