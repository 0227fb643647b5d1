"""Shot-noise sensitivity estimators, readout contrast models, and the
CW sensitivity optimizer.

The shot-noise formulas convert linewidth/contrast/photon-rate triples
into minimum detectable fields.  The optimizer scans laser saturation
fraction s and Rabi frequency with a calibrated contrast model (see
:class:`CwSensitivityModel`; its constants are fitted and flagged in
every report that uses them).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import (DR_ENHANCEMENT, ELEMENTARY_CHARGE, GAMMA_NV,
                        HYPERFINE_ENHANCEMENT, K_BOLTZMANN)
from .odmr import cw_linewidth

TWO_PI = 2.0 * math.pi
P_F_LORENTZIAN = 0.77  # lineshape factor for a Lorentzian profile


class ZeroSignalError(ZeroDivisionError):
    """Sensitivity is unbounded for zero contrast or photon rate."""


def shot_noise_cw(p_f: float, linewidth: float, contrast: float,
                  photon_rate: float, t: float) -> float:
    """Shot-noise limited CW-ODMR field resolution (tesla).

    p_f * (h / g mu_B) * linewidth / (contrast * sqrt(photon_rate * t)),
    with h/(g mu_B) expressed through 1/gamma_NV.
    """
    if contrast <= 0 or photon_rate <= 0:
        raise ZeroSignalError("contrast and photon rate must be positive")
    if t <= 0 or linewidth <= 0 or p_f <= 0:
        raise ValueError("p_f, linewidth, and t must be positive")
    return p_f * linewidth / (GAMMA_NV * contrast * math.sqrt(photon_rate * t))


def shot_noise_ramsey(contrast: float, photons_per_meas: float, tau_m: float,
                      t_seq: float, t: float) -> float:
    """Shot-noise limited Ramsey field resolution (tesla).

    (hbar / g mu_B) / (C sqrt(N tau_m t)) * sqrt(t_seq / tau_m).  With
    N = R t_seq this reduces to (hbar/g mu_B) / (C tau_m sqrt(R t)).
    """
    if contrast <= 0 or photons_per_meas <= 0:
        raise ZeroSignalError("contrast and photon number must be positive")
    if not 0 < tau_m <= t_seq:
        raise ValueError("need 0 < tau_m <= t_seq")
    if t <= 0:
        raise ValueError("t must be positive")
    hbar_over_gmub = 1.0 / (TWO_PI * GAMMA_NV)
    return (hbar_over_gmub / (contrast * math.sqrt(photons_per_meas * tau_m * t))
            * math.sqrt(t_seq / tau_m))


def photon_rate_from_pd(u_pd: float, transimpedance_gain: float) -> float:
    """Detected photon count rate (Hz) from the photodiode voltage."""
    if transimpedance_gain <= 0:
        raise ValueError("transimpedance gain must be positive")
    return u_pd / (transimpedance_gain * ELEMENTARY_CHARGE)


@dataclass(frozen=True)
class ReadoutGeometry:
    """Timing and fluorescence-recovery parameters of the lock-in readout.

    The recovery after depolarization is modeled as
    u_fl(t) = -a_fl exp(-t / tau_fl) relative to the polarized level,
    with t measured from the start of the current repolarization.
    """

    t_seq: float            # cycle time, s
    tau_m: float            # field sensing interval, s
    delta_t: float          # acquisition gate length, s
    t0: float               # repolarization reference time, s
    a_fl: float = 105e-3    # largest fluorescence decrease, V
    tau_fl: float = 0.1e-3  # recovery time constant, s
    t2_star: float = 8.5e-6
    t_ref: float = 110e-6   # reference cycle time for equivalent contrast, s

    def __post_init__(self):
        if not 0 < self.delta_t <= self.t_seq / 2:
            raise ValueError("need 0 < delta_t <= t_seq/2")
        if not 0 <= self.tau_m < self.t_seq:
            raise ValueError("need 0 <= tau_m < t_seq")
        if self.tau_fl <= 0 or self.t2_star <= 0 or self.t_ref <= 0:
            raise ValueError("time constants must be positive")

    def u_fl(self, t):
        return -self.a_fl * np.exp(-np.asarray(t) / self.tau_fl)


def _u_fl_integral(geom: ReadoutGeometry, a: float, b: float) -> float:
    """Closed-form integral of u_fl over [a, b]."""
    tau = geom.tau_fl
    return -geom.a_fl * tau * (math.exp(-a / tau) - math.exp(-b / tau))


def lia_contrast(geom: ReadoutGeometry) -> float:
    """Lock-in output magnitude (V) of the half-cycle-differenced recovery.

    Difference of the two half-cycle integrals of u_fl around the
    reference time t0, normalized by t_seq/2 and damped by
    exp(-tau_m/T2*).
    """
    if geom.t0 < geom.t_seq / 2:
        raise ValueError("t0 must be at least t_seq/2")
    half = geom.t_seq / 2.0
    first = _u_fl_integral(geom, geom.t0 - half, geom.t0)
    second = _u_fl_integral(geom, geom.t0, geom.t0 + half)
    u = (first - second) / half * math.exp(-geom.tau_m / geom.t2_star)
    return abs(u)


def gated_contrast(geom: ReadoutGeometry) -> float:
    """Gated-readout signal magnitude (V).

    Same two-window difference, but each window is an acquisition gate
    of length delta_t and the normalization is 1/delta_t.  At
    delta_t = t_seq/2 this coincides with :func:`lia_contrast`.
    """
    start = geom.t0 - geom.t_seq / 2.0
    first = _u_fl_integral(geom, start, start + geom.delta_t)
    second = _u_fl_integral(geom, geom.t0, geom.t0 + geom.delta_t)
    u = (first - second) / geom.delta_t * math.exp(-geom.tau_m / geom.t2_star)
    return abs(u)


def equivalent_contrast(c_det: float, geom: ReadoutGeometry) -> float:
    """Detected contrast rescaled by duty-cycle and cycle-time penalties.

    c_det / sqrt(t_seq/delta_t) / sqrt(t_seq/t_ref): comparable across
    gated and continuous acquisition settings.
    """
    return (c_det / math.sqrt(geom.t_seq / geom.delta_t)
            / math.sqrt(geom.t_seq / geom.t_ref))


def coil_noise(r_coil: float, r_battery: float, temperature: float = 293.15,
               current: float | None = None, b_bias: float = 1e-3,
               u_supply: float = 12.0, bandwidth: float = 1.0) -> float:
    """Magnetic field noise (tesla) of a battery-driven bias coil pair.

    Combines Johnson noise of the loop resistance with the battery
    current shot noise, scaled onto the field through
    sqrt(2) b_bias / (2 u_supply).
    """
    if r_coil <= 0 or r_battery < 0:
        raise ValueError("resistances must be positive")
    if current is None:
        current = u_supply / r_coil
    u_j = math.sqrt(4.0 * K_BOLTZMANN * temperature * (r_coil + r_battery) * bandwidth)
    i_shot = math.sqrt(2.0 * ELEMENTARY_CHARGE * current * bandwidth)
    return (math.sqrt(2.0) * b_bias / (2.0 * u_supply)
            * math.hypot(u_j, i_shot * r_coil))


def volume_normalized(eta: float, volume_mm3: float) -> float:
    """Volume-normalized sensitivity eta * sqrt(V), in T mm^(3/2)/sqrt(Hz)."""
    if volume_mm3 <= 0:
        raise ValueError("volume must be positive")
    return eta * math.sqrt(volume_mm3)


@dataclass(frozen=True)
class CwSensitivityModel:
    """Calibrated CW-ODMR sensitivity model over (s, omega_r).

    Linewidth comes from :func:`nvmag.odmr.cw_linewidth`; the photon
    rate scales linearly with s below saturation and is anchored to the
    measured rate at the reference power.  The detected contrast is

        c_inf * s/(s + s_pol) * u/(u + xi),  u = omega_r^2/(G2 * G1p)

    (polarization buildup times MW saturation).  gamma_p_sat, s_pol,
    xi, and c_inf are fitted model constants, not first-principles
    values; they are reported alongside every optimization result.
    """

    gamma_p_sat: float = 5.0e8      # pumping rate at s = 1, 1/s (fitted)
    s_pol: float = 1.93e-5          # polarization knee (fitted)
    xi: float = 0.107               # MW saturation scale (fitted)
    c_inf: float = 9.55e-3          # detected single-line contrast ceiling (fitted)
    photon_rate_ref: float = 4.6e15  # measured rate at s_ref, Hz
    s_ref: float = 3e-4
    p_f: float = P_F_LORENTZIAN

    def gamma_p(self, s):
        return np.asarray(s) * self.gamma_p_sat

    def photon_rate(self, s):
        return self.photon_rate_ref * np.asarray(s) / self.s_ref

    def contrast(self, s, omega_r, gamma_1: float, gamma_2_star: float):
        s = np.asarray(s, dtype=float)
        omega_r = np.asarray(omega_r, dtype=float)
        gp = self.gamma_p(s)
        g2 = gamma_2_star + gp
        g1p = 2.0 * gamma_1 + gp
        u = omega_r**2 / (g2 * g1p)
        return self.c_inf * (s / (s + self.s_pol)) * (u / (u + self.xi))

    def fitted_constants(self) -> dict:
        return {"gamma_p_sat": self.gamma_p_sat, "s_pol": self.s_pol,
                "xi": self.xi, "c_inf": self.c_inf}

    def delta_b(self, s, omega_r, gamma_1: float, gamma_2_star: float,
                t: float = 1.0):
        """Shot-noise field resolution map (tesla) over (s, omega_r)."""
        s = np.asarray(s, dtype=float)
        omega_r = np.asarray(omega_r, dtype=float)
        gp = self.gamma_p(s)
        g2 = gamma_2_star + gp
        g1p = 2.0 * gamma_1 + gp
        nu = np.sqrt(g2**2 + omega_r**2 * g2 / g1p) / TWO_PI
        c = self.contrast(s, omega_r, gamma_1, gamma_2_star)
        rate = self.photon_rate(s)
        return self.p_f * nu / (GAMMA_NV * c * np.sqrt(rate * t))


@dataclass(frozen=True)
class OptimizationResult:
    """Exhaustive-search optimum and the full sensitivity map."""

    s_opt: float
    omega_r_opt: float          # rad/s
    delta_b: float              # tesla at the optimum, single line
    delta_b_enhanced: float     # with hyperfine and DR factors applied
    contrast: float
    linewidth: float            # Hz
    photon_rate: float          # Hz
    s_grid: np.ndarray
    omega_grid: np.ndarray      # rad/s
    delta_b_map: np.ndarray     # shape (len(s_grid), len(omega_grid))
    fitted_constants: dict = field(default_factory=dict)

    @property
    def omega_r_opt_hz(self) -> float:
        return self.omega_r_opt / TWO_PI

    def map_to_csv(self, path) -> None:
        rows = []
        for i, s in enumerate(self.s_grid):
            for j, om in enumerate(self.omega_grid):
                rows.append((s, om / TWO_PI, self.delta_b_map[i, j]))
        np.savetxt(path, np.asarray(rows), delimiter=",",
                   header="s,omega_r_hz,delta_b_tesla", comments="",
                   fmt="%.17g")


def optimize_cw(t1: float, t2_star: float, s_grid: np.ndarray,
                omega_grid: np.ndarray, model: CwSensitivityModel | None = None,
                t: float = 1.0) -> OptimizationResult:
    """Exhaustive search of the shot-noise map over (s, omega_r).

    ``omega_grid`` is in rad/s.  Ties break toward the lowest omega_r,
    then the lowest s, so the reduction is deterministic under any
    evaluation order.
    """
    s_grid = np.asarray(s_grid, dtype=float)
    omega_grid = np.asarray(omega_grid, dtype=float)
    if s_grid.size == 0 or omega_grid.size == 0:
        raise ValueError("grids must be nonempty")
    if model is None:
        model = CwSensitivityModel()
    gamma_1 = 1.0 / t1
    gamma_2_star = 1.0 / t2_star
    ss, om = np.meshgrid(s_grid, omega_grid, indexing="ij")
    db = model.delta_b(ss, om, gamma_1, gamma_2_star, t)
    best = db.min()
    # deterministic tie-break: lowest omega_r, then lowest s
    candidates = np.argwhere(db == best)
    order = np.lexsort((s_grid[candidates[:, 0]], omega_grid[candidates[:, 1]]))
    i, j = candidates[order[0]]
    s_opt = float(s_grid[i])
    omega_opt = float(omega_grid[j])
    contrast = float(model.contrast(s_opt, omega_opt, gamma_1, gamma_2_star))
    linewidth = cw_linewidth(gamma_1, gamma_2_star,
                             float(model.gamma_p(s_opt)), omega_opt)
    enhancement = HYPERFINE_ENHANCEMENT * DR_ENHANCEMENT
    return OptimizationResult(
        s_opt=s_opt, omega_r_opt=omega_opt, delta_b=float(best),
        delta_b_enhanced=float(best) / enhancement, contrast=contrast,
        linewidth=linewidth, photon_rate=float(model.photon_rate(s_opt)),
        s_grid=s_grid, omega_grid=omega_grid, delta_b_map=db,
        fitted_constants=model.fitted_constants(),
    )


@dataclass(frozen=True)
class SensitivityReport:
    """Summary of a sensitivity estimate for reporting/JSON export."""

    delta_b: float              # tesla at measurement_time
    eta: float                  # T/sqrt(Hz)
    contrast: float
    linewidth: float            # Hz
    photon_rate: float          # Hz
    measurement_time: float = 1.0
    scalar_factor: float | None = None        # V/T
    eta_v: float | None = None                # T mm^{3/2}/sqrt(Hz)
    hyperfine_factor: float = HYPERFINE_ENHANCEMENT
    dr_factor: float = DR_ENHANCEMENT
    fitted_constants: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.delta_b <= 0 or self.eta <= 0:
            raise ValueError("delta_b and eta must be positive")
        expected = self.eta / math.sqrt(self.measurement_time)
        if not math.isclose(self.delta_b, expected, rel_tol=1e-9):
            raise ValueError("delta_b must equal eta / sqrt(measurement_time)")

    def to_dict(self) -> dict:
        out = {
            "delta_b_tesla": self.delta_b,
            "eta_t_per_sqrt_hz": self.eta,
            "contrast": self.contrast,
            "linewidth_hz": self.linewidth,
            "photon_rate_hz": self.photon_rate,
            "measurement_time_s": self.measurement_time,
            "hyperfine_factor": self.hyperfine_factor,
            "dr_factor": self.dr_factor,
        }
        if self.scalar_factor is not None:
            out["scalar_factor_v_per_t"] = self.scalar_factor
        if self.eta_v is not None:
            out["eta_v_t_mm32_per_sqrt_hz"] = self.eta_v
        if self.fitted_constants:
            out["fitted_model_constants"] = dict(self.fitted_constants)
        return out
