"""Physical constants and empirical enhancement factors used across the toolkit."""

from scipy.constants import Boltzmann as K_BOLTZMANN
from scipy.constants import elementary_charge as ELEMENTARY_CHARGE
from scipy.constants import h as PLANCK_H

# NV- ground-state gyromagnetic ratio, Hz/T.  Pinned numerical value
# (g ~ 2.003); every field/frequency conversion in the package goes
# through this single constant.
GAMMA_NV = 28.024e9

# Empirical contrast/scalar-factor enhancements: driving all three
# nitrogen hyperfine lines, and double-resonance driving of both
# |0>->|+-1> transitions.  Applied multiplicatively in reports, never
# simulated microscopically.
HYPERFINE_ENHANCEMENT = 2.67
DR_ENHANCEMENT = 1.3

__all__ = [
    "GAMMA_NV",
    "HYPERFINE_ENHANCEMENT",
    "DR_ENHANCEMENT",
    "K_BOLTZMANN",
    "ELEMENTARY_CHARGE",
    "PLANCK_H",
]
