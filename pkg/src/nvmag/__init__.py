"""NV-ensemble DC magnetometry simulator and analysis toolkit.

Subpackages by area: :mod:`nvmag.kinetics` (eight-level photo/spin
dynamics), :mod:`nvmag.mwsignal` (modulated MW signal models),
:mod:`nvmag.odmr` (CW-ODMR observables), :mod:`nvmag.sensitivity`
(shot-noise estimators and the CW optimizer), :mod:`nvmag.lockin`
(digital lock-in and CE-Ramsey scheduling), :mod:`nvmag.analysis`
(trace analysis pipeline), :mod:`nvmag.runner` (configuration and
experiment orchestration; the ``nvmag`` command line lives in
:mod:`nvmag.cli`).
"""

__version__ = "0.1.0"

from .constants import DR_ENHANCEMENT, GAMMA_NV, HYPERFINE_ENHANCEMENT
from .kinetics import KineticsParams, NVState, Trajectory
from .mwsignal import MWModulation
from .trace import TimeTrace, load_trace, save_trace

__all__ = [
    "__version__",
    "GAMMA_NV",
    "HYPERFINE_ENHANCEMENT",
    "DR_ENHANCEMENT",
    "KineticsParams",
    "NVState",
    "Trajectory",
    "MWModulation",
    "TimeTrace",
    "load_trace",
    "save_trace",
]
