import numpy as np
import pytest

from hotpa import curves as C
from hotpa import grid as G
from hotpa import units as U


@pytest.fixture(scope="session")
def toy_curves():
    """Light-mass synthetic diabatic curve set for fast tiny-grid dynamics."""
    wl = U.omega_from_nm(840.0)
    return C.CurveSet(
        label="toy", reduced_mass=200.0, omega_l=wl,
        ground=C.morse_curve(0.02, 4.0, 0.8, 0.0, label="g"),
        excited=C.morse_curve(0.08, 3.5, 0.8, 2.2 * wl, label="e"),
        upper=(C.morse_curve(0.05, 3.2, 0.8, 3.1 * wl, label="u1"),
               C.morse_curve(0.06, 3.8, 0.8, 3.4 * wl, label="u2"),
               C.morse_curve(0.05, 3.5, 0.8, 3.3 * wl, label="u3")),
        two_photon_moment=C.constant_profile(60.0, label="M"),
        stark_traces={"g": C.constant_profile(150.0), "e": C.constant_profile(300.0),
                      "11": C.constant_profile(250.0), "22": C.constant_profile(250.0),
                      "12": C.constant_profile(20.0)},
        dipoles=(C.constant_profile(2.5), C.constant_profile(1.5),
                 C.constant_profile(1.0)),
        diabatic_coupling=C.constant_profile(0.002, label="V12"),
        upper_representation="diabatic")


@pytest.fixture(scope="session")
def model_curves():
    return C.model_mg2()


@pytest.fixture
def tiny_grid():
    return G.make_grid(1.0, 9.0, 10)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_state(grid, labels, J, rng):
    """Random multichannel state with hard-wall endpoints."""
    amps = rng.standard_normal((len(labels), grid.n_points)) \
        + 1j * rng.standard_normal((len(labels), grid.n_points))
    amps[:, 0] = amps[:, -1] = 0.0
    return G.ChannelState(grid, labels, amps, J)
