"""Modulated microwave signal models.

FM/PM angle modulation with modulation index beta (= f_d/f_m for FM,
= phi_d for PM), Carson bandwidth, Bessel sideband decomposition, and
the two-tone description of an AM signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import jv

TWO_PI = 2.0 * math.pi


class UnsupportedModulationError(ValueError):
    """Operation not defined for this modulation kind."""


@dataclass(frozen=True)
class MWModulation:
    """Angle- or amplitude-modulated MW signal parameters.

    kind : 'FM', 'PM', or 'AM'
    f0 : carrier frequency (Hz)
    f_m : modulation frequency (Hz)
    f_d : frequency deviation (Hz), FM only
    phi_d : phase deviation (rad), PM only
    """

    kind: str
    f0: float
    f_m: float
    f_d: float = 0.0
    phi_d: float = 0.0

    def __post_init__(self):
        if self.kind not in ("FM", "PM", "AM"):
            raise ValueError("kind must be 'FM', 'PM', or 'AM'")
        if self.f_m <= 0:
            raise ValueError("f_m must be positive")
        if self.f_d < 0:
            raise ValueError("f_d must be >= 0")
        if self.kind == "FM" and self.phi_d:
            # cross-check: the two deviation parameters must agree
            if not math.isclose(self.phi_d, self.f_d / self.f_m, rel_tol=1e-9):
                raise ValueError("FM with phi_d set requires phi_d == f_d/f_m")
        if self.kind == "PM" and self.f_d:
            if not math.isclose(self.f_d, self.phi_d * self.f_m, rel_tol=1e-9):
                raise ValueError("PM with f_d set requires f_d == phi_d*f_m")

    @property
    def beta(self) -> float:
        """Modulation index: f_d/f_m (FM) or phi_d (PM)."""
        if self.kind == "FM":
            return self.f_d / self.f_m
        if self.kind == "PM":
            return self.phi_d
        raise UnsupportedModulationError("AM has no modulation index")

    @property
    def deviation(self) -> float:
        """Peak instantaneous frequency deviation (Hz)."""
        return self.beta * self.f_m


def fm(f0: float, f_m: float, f_d: float) -> MWModulation:
    return MWModulation(kind="FM", f0=f0, f_m=f_m, f_d=f_d)


def pm(f0: float, f_m: float, phi_d: float) -> MWModulation:
    return MWModulation(kind="PM", f0=f0, f_m=f_m, phi_d=phi_d)


def instantaneous_detuning(mod: MWModulation, t) -> np.ndarray | float:
    """Instantaneous carrier frequency offset (Hz) at time t.

    Cosine phase convention: the deviation is maximal at t = 0.  For FM
    this is f_d cos(2 pi f_m t); PM is identical through
    f_d = phi_d * f_m (derivative of the phase excursion).
    """
    if mod.kind == "AM":
        raise UnsupportedModulationError("AM carrier frequency is fixed")
    return mod.deviation * np.cos(TWO_PI * mod.f_m * np.asarray(t, dtype=float))


def carson_bandwidth(mod: MWModulation) -> float:
    """Carson bandwidth: 2(f_d + f_m) for FM, 2(phi_d + 1) f_m for PM."""
    if mod.kind == "FM":
        return 2.0 * (mod.f_d + mod.f_m)
    if mod.kind == "PM":
        return 2.0 * (mod.phi_d + 1.0) * mod.f_m
    raise UnsupportedModulationError("Carson bandwidth is defined for FM/PM only")


def bessel_sidebands(beta: float, n_max: int) -> np.ndarray:
    """Sideband amplitudes J_n(beta) for n = 0..n_max."""
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    return jv(np.arange(n_max + 1), beta)


def sideband_amplitude(n: int, beta: float) -> float:
    """Amplitude of the n-th sideband; J_(-n) = (-1)^n J_n."""
    a = float(jv(abs(n), beta))
    return a if n >= 0 or n % 2 == 0 else -a


@dataclass(frozen=True)
class AmSidebands:
    """Two-tone description of an AM MW signal."""

    lower: float  # f0 - f_m (Hz)
    upper: float  # f0 + f_m (Hz)
    amplitude: float  # equal amplitude of both tones
    splitting: float  # 2 f_m (Hz)
    degenerate: bool  # f_m = 0: single tone
    splitting_resolved: bool  # splitting comparable to the ODMR line


def am_two_tone(f0: float, f_m: float, odmr_hwhm: float | None = None,
                amplitude: float = 0.5) -> AmSidebands:
    """Sidebands of an AM signal: two equal tones at f0 +- f_m.

    When the ODMR half width is supplied, the result is flagged as
    spectrum splitting once 2 f_m reaches it.
    """
    if f_m < 0:
        raise ValueError("f_m must be >= 0")
    degenerate = f_m == 0.0
    resolved = bool(odmr_hwhm is not None and not degenerate
                    and 2.0 * f_m >= odmr_hwhm)
    return AmSidebands(lower=f0 - f_m, upper=f0 + f_m, amplitude=amplitude,
                       splitting=2.0 * f_m, degenerate=degenerate,
                       splitting_resolved=resolved)
