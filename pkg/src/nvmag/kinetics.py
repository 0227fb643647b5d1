"""Eight-level NV photo/spin kinetics.

Ground-state sublevels |0>, |-1>, |+1> (populations n1..n3), the
corresponding excited states (n4..n6), an intersystem-crossing
intermediate (n7), the metastable singlet (n8), and the |0><+1| ground
coherence (rho01_re, rho01_im) evolve under optical pumping, T1
relaxation, dephasing, and near-resonant MW driving.  The system is
linear in the state vector; the MW detuning may be time dependent.

Unit conventions: every rate (gamma_p, gamma_1, gamma_2_star, r_*) is a
plain rate in 1/s; the Rabi frequency omega_r and the detuning delta are
angular (rad/s).  Use :func:`rad_per_s` / :func:`cycles_per_s` to
convert.

Two sign choices in the population/coherence coupling are fixed by
conservation and stability rather than left free: the singlet feed term
enters dn8/dt with a positive sign, and the MW exchange terms in dn1/dt
and dn3/dt carry opposite signs.  The exchange coefficient is 3/2 so
that, together with the 1/3 factor in the coherence drive, on-resonance
population flopping runs exactly at omega_r (see
:func:`rabi_flopping_frequency`).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .trace import TimeTrace

TWO_PI = 2.0 * math.pi

# index layout of the state vector
_N_POP = 8
_IDX_RE = 8
_IDX_IM = 9
_DIM = 10


class InvalidStateError(ValueError):
    """State vector contains non-finite components."""


class StiffnessError(RuntimeError):
    """The integrator failed to advance (step-size underflow)."""


class SteadyStateError(RuntimeError):
    """No steady state found within the residual budget."""


def rad_per_s(frequency_hz: float) -> float:
    """Convert an ordinary frequency (Hz) to an angular rate (rad/s)."""
    return TWO_PI * frequency_hz


def cycles_per_s(omega: float) -> float:
    """Convert an angular rate (rad/s) to an ordinary frequency (Hz)."""
    return omega / TWO_PI


@dataclass(frozen=True)
class KineticsParams:
    """Transition rates and MW drive parameters.

    All rates in 1/s; ``omega_r`` and ``delta`` in rad/s.  ``delta`` may
    be a callable t -> rad/s for modulated driving.
    """

    gamma_p: float = 0.026e6        # optical pumping rate
    gamma_1: float = 1.0 / 6e-3     # 1/T1
    gamma_2_star: float = 1.0 / 8.5e-6  # 1/T2*
    r_fl: float = 66e6              # fluorescence emission rate
    r_47: float = 0.0               # |0> excited -> intermediate (no value given; spin conserving)
    r_57: float = 53e6
    r_67: float = 53e6
    r_78: float = 1000e6            # intermediate -> singlet
    r_81: float = 1e6               # singlet -> |0>
    r_82: float = 0.7e6
    r_83: float = 0.7e6
    omega_r: float = 0.0            # Rabi angular frequency, rad/s
    delta: float | Callable[[float], float] = 0.0  # MW detuning, rad/s

    def __post_init__(self):
        for name in ("gamma_p", "gamma_1", "gamma_2_star", "r_fl", "r_47",
                     "r_57", "r_67", "r_78", "r_81", "r_82", "r_83"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.omega_r < 0:
            raise ValueError("omega_r must be >= 0")

    def delta_at(self, t: float) -> float:
        if callable(self.delta):
            return float(self.delta(t))
        return self.delta

    @property
    def delta_is_constant(self) -> bool:
        return not callable(self.delta)

    @property
    def max_rate(self) -> float:
        """Fastest rate scale in the model (sets the stiffness)."""
        return max(self.gamma_p, self.gamma_1, self.gamma_2_star, self.r_fl,
                   self.r_47, self.r_57, self.r_67, self.r_78,
                   self.r_81, self.r_82, self.r_83, self.omega_r)


@dataclass(frozen=True)
class NVState:
    """Populations n1..n8 plus the ground-state coherence components."""

    n1: float = 1.0
    n2: float = 0.0
    n3: float = 0.0
    n4: float = 0.0
    n5: float = 0.0
    n6: float = 0.0
    n7: float = 0.0
    n8: float = 0.0
    rho01_re: float = 0.0
    rho01_im: float = 0.0

    def to_array(self) -> np.ndarray:
        return np.array([self.n1, self.n2, self.n3, self.n4, self.n5,
                         self.n6, self.n7, self.n8,
                         self.rho01_re, self.rho01_im])

    @classmethod
    def from_array(cls, y: Sequence[float]) -> "NVState":
        y = np.asarray(y, dtype=float)
        if y.shape != (_DIM,):
            raise ValueError(f"state vector must have {_DIM} components")
        return cls(*y)

    @property
    def populations(self) -> np.ndarray:
        return self.to_array()[:_N_POP]

    @property
    def population_sum(self) -> float:
        return float(self.populations.sum())

    @property
    def coherence_magnitude(self) -> float:
        return math.hypot(self.rho01_re, self.rho01_im)

    @property
    def fluorescence(self) -> float:
        """Fluorescence observable: total excited-state population."""
        return self.n4 + self.n5 + self.n6


def depolarized_ground_state() -> NVState:
    """Fully depolarized ground manifold, empty excited/singlet levels."""
    return NVState(n1=1 / 3, n2=1 / 3, n3=1 / 3)


def rate_matrix(params: KineticsParams, delta: float | None = None) -> np.ndarray:
    """Generator matrix A with dy/dt = A y at the given detuning (rad/s).

    Population columns sum to zero exactly, so every consistent
    integrator conserves the total population to roundoff.
    """
    if delta is None:
        if not params.delta_is_constant:
            raise ValueError("time-dependent delta: pass the evaluated value")
        delta = params.delta  # type: ignore[assignment]
    p = params
    g13 = p.gamma_1 / 3.0
    drive = 1.5 * p.omega_r
    a = np.zeros((_DIM, _DIM))
    # ground sublevels
    a[0, 0] = -p.gamma_p - 2 * g13
    a[0, 1] = g13
    a[0, 2] = g13
    a[0, 3] = p.r_fl
    a[0, 7] = p.r_81
    a[0, _IDX_IM] = -drive
    a[1, 0] = g13
    a[1, 1] = -p.gamma_p - 2 * g13
    a[1, 2] = g13
    a[1, 4] = p.r_fl
    a[1, 7] = p.r_82
    a[2, 0] = g13
    a[2, 1] = g13
    a[2, 2] = -p.gamma_p - 2 * g13
    a[2, 5] = p.r_fl
    a[2, 7] = p.r_83
    a[2, _IDX_IM] = drive
    # excited states
    a[3, 0] = p.gamma_p
    a[3, 3] = -p.r_fl - p.r_47
    a[4, 1] = p.gamma_p
    a[4, 4] = -p.r_fl - p.r_57
    a[5, 2] = p.gamma_p
    a[5, 5] = -p.r_fl - p.r_67
    # intersystem crossing intermediate and metastable singlet
    a[6, 3] = p.r_47
    a[6, 4] = p.r_57
    a[6, 5] = p.r_67
    a[6, 6] = -p.r_78
    a[7, 6] = p.r_78
    a[7, 7] = -(p.r_81 + p.r_82 + p.r_83)
    # ground coherence: damped rotation at delta plus the MW source term
    a[_IDX_RE, _IDX_RE] = -p.gamma_2_star
    a[_IDX_RE, _IDX_IM] = delta
    a[_IDX_IM, _IDX_RE] = -delta
    a[_IDX_IM, _IDX_IM] = -p.gamma_2_star
    a[_IDX_IM, 0] = p.omega_r / 3.0
    a[_IDX_IM, 2] = -p.omega_r / 3.0
    return a


def derivatives(state: NVState, params: KineticsParams, t: float = 0.0) -> NVState:
    """Time derivative of the state at time t (an NVState of rates)."""
    y = state.to_array()
    if not np.all(np.isfinite(y)):
        raise InvalidStateError("state contains non-finite components")
    a = rate_matrix(params, params.delta_at(t))
    return NVState.from_array(a @ y)


@dataclass(frozen=True)
class Trajectory:
    """Integration result: times (s), state rows, fluorescence per sample."""

    times: np.ndarray
    states: np.ndarray  # shape (n_samples, 10)
    params: KineticsParams

    @property
    def fluorescence(self) -> np.ndarray:
        return self.states[:, 3:6].sum(axis=1)

    @property
    def populations(self) -> np.ndarray:
        return self.states[:, :_N_POP]

    @property
    def population_sums(self) -> np.ndarray:
        return self.populations.sum(axis=1)

    def state_at(self, i: int) -> NVState:
        return NVState.from_array(self.states[i])

    @property
    def final_state(self) -> NVState:
        return self.state_at(-1)

    def to_csv(self, path) -> None:
        header = "time_s,n1,n2,n3,n4,n5,n6,n7,n8,rho_re,rho_im,fluorescence"
        data = np.column_stack([self.times, self.states, self.fluorescence])
        np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")

    def fluorescence_trace(self) -> TimeTrace:
        """Fluorescence as a TimeTrace (requires uniform sampling)."""
        dt = np.diff(self.times)
        if dt.size == 0 or np.ptp(dt) > 1e-9 * dt.mean():
            raise ValueError("trajectory is not uniformly sampled")
        return TimeTrace(self.fluorescence, sample_rate=1.0 / dt.mean(),
                         start_time=float(self.times[0]), units="arb")


def integrate(state0: NVState, params: KineticsParams, duration: float,
              tolerance: float = 1e-9, sample_times: np.ndarray | None = None,
              method: str = "LSODA") -> Trajectory:
    """Adaptive integration of the kinetics over [0, duration].

    Dense output is evaluated at ``sample_times`` (default: 1000 evenly
    spaced points).  Population positivity is checked, not clamped;
    undershoot beyond -1e-12 raises a warning.
    """
    if duration < 0:
        raise ValueError("duration must be >= 0")
    y0 = state0.to_array()
    if not np.all(np.isfinite(y0)):
        raise InvalidStateError("initial state contains non-finite components")
    if duration == 0.0:
        return Trajectory(times=np.array([0.0]), states=y0[None, :], params=params)
    if sample_times is None:
        sample_times = np.linspace(0.0, duration, 1000)
    else:
        sample_times = np.asarray(sample_times, dtype=float)

    if params.delta_is_constant:
        a = rate_matrix(params)

        def rhs(t, y):
            return a @ y

        def jac(t, y):
            return a
    else:
        base = rate_matrix(replace(params, delta=0.0))
        coupling = np.zeros((_DIM, _DIM))
        coupling[_IDX_RE, _IDX_IM] = 1.0
        coupling[_IDX_IM, _IDX_RE] = -1.0

        def rhs(t, y):
            return (base + params.delta_at(t) * coupling) @ y

        def jac(t, y):
            return base + params.delta_at(t) * coupling

    sol = solve_ivp(rhs, (0.0, duration), y0, method=method, jac=jac,
                    t_eval=sample_times, rtol=tolerance, atol=1e-13)
    if not sol.success:
        raise StiffnessError(
            f"integration failed ({sol.message}); fastest rate scale "
            f"{params.max_rate:.3g}/s over {duration:.3g} s"
        )
    states = sol.y.T
    min_pop = states[:, :_N_POP].min()
    if min_pop < -1e-12:
        warnings.warn(f"population undershoot {min_pop:.3g} below -1e-12",
                      RuntimeWarning, stacklevel=2)
    return Trajectory(times=sol.t, states=states, params=params)


def propagate(state0: NVState, params: KineticsParams, duration: float,
              tolerance: float = 1e-9) -> NVState:
    """Final state only (no dense output)."""
    if duration == 0.0:
        return state0
    traj = integrate(state0, params, duration, tolerance,
                     sample_times=np.array([duration]))
    return traj.final_state


def steady_state(params: KineticsParams, residual_budget: float = 1e-12) -> NVState:
    """Stationary state of the kinetics at constant detuning.

    Solves A y = 0 under sum(populations) = 1.  The residual
    ||A y||_inf must not exceed ``residual_budget`` times the dominant
    rate.
    """
    if params.gamma_p <= 0 and params.gamma_1 <= 0:
        raise ValueError("steady state needs gamma_p > 0 or gamma_1 > 0")
    if not params.delta_is_constant:
        raise ValueError("steady state requires a constant detuning")
    a = rate_matrix(params)
    m = np.vstack([a, np.concatenate([np.ones(_N_POP), np.zeros(2)])])
    rhs = np.zeros(_DIM + 1)
    rhs[-1] = 1.0
    # balance row magnitudes (rates span ~1e2..1e9/s) before least squares
    scale = np.maximum(np.abs(m).max(axis=1), 1.0)
    y, *_ = np.linalg.lstsq(m / scale[:, None], rhs / scale, rcond=None)
    pop_sum = y[:_N_POP].sum()
    if pop_sum > 0:
        y = y / pop_sum  # A y = 0 is scale invariant; enforce sum exactly
    residual = np.abs(a @ y).max()
    scale = max(params.max_rate, params.gamma_1)
    if residual > residual_budget * scale:
        raise SteadyStateError(
            f"steady-state residual {residual:.3g} exceeds budget "
            f"{residual_budget:.3g} x {scale:.3g}/s"
        )
    return NVState.from_array(y)


def polarized_state(params: KineticsParams) -> NVState:
    """Laser-polarized stationary state (MW off)."""
    return steady_state(replace(params, omega_r=0.0, delta=0.0))


def rabi_flopping_frequency(params: KineticsParams) -> float:
    """Damped population flopping frequency in Hz.

    sqrt(omega_r^2 - (gamma_p/4 - gamma_1/2)^2) / 2pi, with omega_r in
    rad/s and the damping rates in 1/s (mixed convention kept from the
    source model; the correction is negligible whenever omega_r
    dominates the relaxation rates).
    """
    damping = params.gamma_p / 4.0 - params.gamma_1 / 2.0
    arg = params.omega_r**2 - damping**2
    if arg <= 0:
        return 0.0  # overdamped: no flopping
    return math.sqrt(arg) / TWO_PI


def simulate_repolarization(params: KineticsParams, duration: float,
                            n_points: int = 600) -> TimeTrace:
    """Fluorescence recovery from a fully depolarized ground manifold.

    Laser on, MW off.  The trace rises monotonically toward the
    polarized steady state.
    """
    p = replace(params, omega_r=0.0, delta=0.0)
    traj = integrate(depolarized_ground_state(), p, duration,
                     sample_times=np.linspace(0.0, duration, n_points))
    return traj.fluorescence_trace()


def simulate_rabi(params: KineticsParams, duration: float,
                  continuous_excitation: bool = True, n_points: int = 2000,
                  readout_gate: float = 10e-6) -> TimeTrace:
    """MW-driven fluorescence oscillation starting from the polarized state.

    With continuous excitation the laser stays on during the drive and
    the returned trace is fluorescence vs time.  In gated mode the
    laser is off while the MW is applied; the trace is then the
    gate-averaged readout fluorescence vs MW pulse length.
    """
    if params.omega_r <= 0:
        raise ValueError("simulate_rabi needs omega_r > 0")
    y0 = polarized_state(params)
    if continuous_excitation:
        traj = integrate(y0, params, duration,
                         sample_times=np.linspace(0.0, duration, n_points))
        return traj.fluorescence_trace()
    pulse_lengths = np.linspace(0.0, duration, n_points)
    dark = replace(params, gamma_p=0.0)
    readout = replace(params, omega_r=0.0)
    signal = np.empty(n_points)
    for i, tp in enumerate(pulse_lengths):
        y = propagate(y0, dark, tp)
        signal[i] = _gate_average_fluorescence(y, readout, readout_gate)
    rate = (n_points - 1) / duration
    return TimeTrace(signal, sample_rate=rate, units="arb")


def _gate_average_fluorescence(state: NVState, params: KineticsParams,
                               gate: float, n_eval: int = 25) -> float:
    traj = integrate(state, params, gate,
                     sample_times=np.linspace(0.0, gate, n_eval))
    return float(np.trapezoid(traj.fluorescence, traj.times) / gate)


def simulate_fid(params: KineticsParams, tau_max: float,
                 hyperfine_detunings: Sequence[float] | None = None,
                 continuous_excitation: bool = True, n_points: int = 200,
                 readout_gate: float = 10e-6) -> TimeTrace:
    """Free-induction decay via a pi/2 - tau - pi/2 sequence.

    The signal is the gate-averaged readout fluorescence after the
    second pulse, averaged over equal-weight subensembles detuned by
    ``hyperfine_detunings`` (Hz; default 0 and +-2.2 MHz, the nitrogen
    I = +-1 precession lines).  Continuous excitation keeps the pump on
    during pulses and free evolution; gated mode turns it off there and
    on only for the readout gate.
    """
    if params.omega_r <= 0:
        raise ValueError("simulate_fid needs omega_r > 0 for the pulses")
    if hyperfine_detunings is None:
        hyperfine_detunings = (0.0, 2.2e6, -2.2e6)
    taus = np.linspace(0.0, tau_max, n_points)
    t_pulse = (math.pi / 2.0) / params.omega_r
    y_start = polarized_state(params)
    signal = np.zeros(n_points)
    for det in hyperfine_detunings:
        delta = rad_per_s(det)
        pump = params.gamma_p if continuous_excitation else 0.0
        drive = replace(params, gamma_p=pump, delta=delta)
        free = replace(drive, omega_r=0.0)
        readout = replace(params, omega_r=0.0, delta=delta)
        y_after_first = propagate(y_start, drive, t_pulse)
        for i, tau in enumerate(taus):
            y = propagate(y_after_first, free, tau)
            y = propagate(y, drive, t_pulse)
            signal[i] += _gate_average_fluorescence(y, readout, readout_gate)
    signal /= len(hyperfine_detunings)
    rate = (n_points - 1) / tau_max
    return TimeTrace(signal, sample_rate=rate, units="arb")
