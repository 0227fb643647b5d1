import numpy as np
import pytest

from nvmag import kinetics


@pytest.fixture
def default_params():
    return kinetics.KineticsParams()


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_valid_state(rng):
    """Random physical state: nonnegative populations summing to 1 and a
    coherence the driven sublevel pair can support."""
    pops = rng.random(8)
    pops /= pops.sum()
    bound = (2.0 / 3.0) * np.sqrt(pops[0] * pops[2])
    mag = rng.uniform(0.0, bound)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    coh = mag * np.array([np.cos(phase), np.sin(phase)])
    return kinetics.NVState.from_array(np.concatenate([pops, coh]))


def random_params(rng, scale_range=(0.1, 10.0), omega_r=0.0, delta=0.0):
    """Random rates within scale_range times the defaults."""
    lo, hi = np.log10(scale_range[0]), np.log10(scale_range[1])
    s = 10.0 ** rng.uniform(lo, hi, size=11)
    return kinetics.KineticsParams(
        gamma_p=0.026e6 * s[0], gamma_1=(1 / 6e-3) * s[1],
        gamma_2_star=(1 / 8.5e-6) * s[2], r_fl=66e6 * s[3],
        r_47=0.0, r_57=53e6 * s[4], r_67=53e6 * s[5], r_78=1000e6 * s[6],
        r_81=1e6 * s[7], r_82=0.7e6 * s[8], r_83=0.7e6 * s[9],
        omega_r=omega_r, delta=delta,
    )
