# grid.py
#
# Radial coordinate grid and multichannel wavefunctions.
#
# The relative motion of the atom pair is represented on an equidistant
# radial mesh; partial waves enter only through the rotational quantum
# number J carried by each state (centrifugal term J(J+1)/2mR^2).
# All quantities in atomic units: lengths in bohr, energies in hartree.
#
# Two kinetic-energy conventions are provided behind one interface:
#
#   "sine"    : particle-in-a-box (hard walls at r_min and r_max).  The
#               wavefunction is taken to vanish at both endpoints and the
#               interior points are transformed with a type-I DST.  This
#               is the convention used for diagonalization, so that the
#               box-discretized continuum matches hard-wall box states.
#   "fourier" : periodic convention (period n_points * spacing), useful
#               for free propagation when an absorbing edge keeps
#               amplitude off the boundary.
#
# Quadrature is a plain grid sum times the spacing (rectangle rule),
# repo-wide, so eigenvector orthonormality from the dense solver and
# wavefunction norms agree bit-consistently.

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft


@dataclass(frozen=True)
class RadialGrid:
    """Equidistant radial mesh on [r_min, r_max], endpoints included."""

    r_min: float
    r_max: float
    n_points: int
    spacing: float = field(init=False)
    r: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_points < 2:
            raise ValueError("n_points must be >= 2")
        if self.r_min <= 0.0:
            raise ValueError("r_min must be positive")
        if self.r_max <= self.r_min:
            raise ValueError("r_max must exceed r_min")
        h = (self.r_max - self.r_min) / (self.n_points - 1)
        object.__setattr__(self, "spacing", h)
        r = np.linspace(self.r_min, self.r_max, self.n_points)
        r.setflags(write=False)
        object.__setattr__(self, "r", r)

    @property
    def n_interior(self) -> int:
        return self.n_points - 2

    @property
    def box_length(self) -> float:
        """Wall-to-wall length of the sine-convention box."""
        return self.r_max - self.r_min

    def sine_momenta(self) -> np.ndarray:
        """Wavenumbers k_n = n pi / L of the sine modes, n = 1..n_interior."""
        n = np.arange(1, self.n_interior + 1)
        return n * np.pi / self.box_length

    def max_kinetic_energy(self, mass: float, convention: str = "sine") -> float:
        """Largest representable kinetic energy for the given convention."""
        if convention == "sine":
            kmax = self.n_interior * np.pi / self.box_length
        elif convention == "fourier":
            kmax = np.pi / self.spacing
        else:
            raise ValueError(f"unknown convention {convention!r}")
        return kmax**2 / (2.0 * mass)


def make_grid(r_min: float, r_max: float, n_points: int) -> RadialGrid:
    """Build an equidistant radial grid; see RadialGrid for invariants."""
    return RadialGrid(float(r_min), float(r_max), int(n_points))


def fast_n_points(n_min: int) -> int:
    """Smallest n >= n_min whose sine transform hits a fast FFT length.

    The type-I DST of the n-2 interior points maps to an FFT of length
    2(n-1); sizes with composite n-1 avoid the slow generic path (a
    prime n-1 costs several times more per step).
    """
    return int(scipy.fft.next_fast_len(max(n_min - 1, 2), real=True)) + 1


def suggested_n_points(r_min: float, r_max: float, mass: float,
                       temperature_k: float, v_min: float = 0.0,
                       factor: float = 4.0) -> int:
    """Default mesh size: max grid kinetic energy >= factor * k_B T + |V_min|.

    This is the documented default formula; ensemble construction checks
    separately that the grid supports the requested Boltzmann cutoff and
    warns if it does not.  The result is rounded up to a fast transform
    size.
    """
    from . import units
    e_need = factor * units.KB_AU * temperature_k + abs(v_min)
    k_need = np.sqrt(2.0 * mass * e_need)
    # sine modes reach k = (n-2) pi / (r_max - r_min)
    return fast_n_points(int(np.ceil(k_need * (r_max - r_min) / np.pi)) + 2)


@dataclass
class ChannelState:
    """Complex multichannel wavefunction on a radial grid at fixed J.

    amplitudes has shape (n_channels, n_points); channel order is fixed
    by channel_labels.  Operations never mutate inputs in place unless
    documented as in-place variants.
    """

    grid: RadialGrid
    channel_labels: tuple
    amplitudes: np.ndarray
    J: int

    def __post_init__(self):
        self.channel_labels = tuple(self.channel_labels)
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 2 or amps.shape != (len(self.channel_labels), self.grid.n_points):
            raise ValueError("amplitude array shape must be (n_channels, n_points)")
        if self.J < 0:
            raise ValueError("J must be nonnegative")
        self.amplitudes = amps

    @property
    def n_channels(self) -> int:
        return len(self.channel_labels)

    def copy(self) -> "ChannelState":
        return ChannelState(self.grid, self.channel_labels, self.amplitudes.copy(), self.J)

    def zeros_like(self) -> "ChannelState":
        return ChannelState(self.grid, self.channel_labels,
                            np.zeros_like(self.amplitudes), self.J)

    def channel(self, label: str) -> np.ndarray:
        return self.amplitudes[self.channel_labels.index(label)]


def single_channel_state(grid: RadialGrid, values: np.ndarray, J: int = 0,
                         label: str = "g") -> ChannelState:
    return ChannelState(grid, (label,), np.asarray(values, dtype=np.complex128)[None, :], J)


def _check_compatible(a: ChannelState, b: ChannelState):
    if a.grid is not b.grid and (a.grid.r_min, a.grid.r_max, a.grid.n_points) != \
            (b.grid.r_min, b.grid.r_max, b.grid.n_points):
        raise ValueError("states live on different grids")
    if a.channel_labels != b.channel_labels:
        raise ValueError("states have different channel layouts")
    if a.J != b.J:
        raise ValueError("states have different J")


def inner_product(a: ChannelState, b: ChannelState) -> complex:
    """<a|b> = sum over channels and grid points of conj(a) b * spacing."""
    _check_compatible(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes) * a.grid.spacing)


def norm(state: ChannelState) -> float:
    val = np.vdot(state.amplitudes, state.amplitudes).real * state.grid.spacing
    return float(np.sqrt(val))


def normalize(state: ChannelState) -> ChannelState:
    n = norm(state)
    if n == 0.0:
        raise ValueError("cannot normalize a zero state")
    return ChannelState(state.grid, state.channel_labels, state.amplitudes / n, state.J)


def centrifugal_term(grid: RadialGrid, J: int, mass: float) -> np.ndarray:
    """J(J+1)/(2 m R^2) at each grid point, hartree."""
    if J < 0:
        raise ValueError("J must be nonnegative")
    if mass <= 0.0:
        raise ValueError("mass must be positive")
    return J * (J + 1) / (2.0 * mass * grid.r**2)


# -- kinetic energy operators ----------------------------------------------

def apply_kinetic_sine(amps: np.ndarray, grid: RadialGrid, mass: float,
                       out: np.ndarray | None = None,
                       scale: float = 1.0) -> np.ndarray:
    """T|psi> in the hard-wall (sine) convention.

    Operates on (n_channels, n_points) arrays; endpoint values are
    treated as zero.  ``scale`` multiplies the kinetic eigenvalues (used
    by the Chebyshev propagator to apply a pre-scaled Hamiltonian).
    """
    if out is None:
        out = np.empty_like(amps)
    k2m = grid.sine_momenta()**2 / (2.0 * mass) * scale
    tmp = scipy.fft.dst(amps[:, 1:-1], type=1, axis=1)
    tmp *= k2m
    out[:, 1:-1] = scipy.fft.idst(tmp, type=1, axis=1)
    out[:, 0] = 0.0
    out[:, -1] = 0.0
    return out


def apply_kinetic_fourier(amps: np.ndarray, grid: RadialGrid, mass: float,
                          out: np.ndarray | None = None,
                          scale: float = 1.0) -> np.ndarray:
    """T|psi> in the periodic (Fourier) convention."""
    if out is None:
        out = np.empty_like(amps)
    k = 2.0 * np.pi * scipy.fft.fftfreq(grid.n_points, d=grid.spacing)
    k2m = k**2 / (2.0 * mass) * scale
    tmp = scipy.fft.fft(amps, axis=1)
    tmp *= k2m
    out[:] = scipy.fft.ifft(tmp, axis=1)
    return out


def apply_kinetic(state: ChannelState, mass: float,
                  convention: str = "sine") -> ChannelState:
    """Return T|psi> per channel via the spectral transform of ``convention``."""
    if mass <= 0.0:
        raise ValueError("mass must be positive")
    result = state.zeros_like()
    if convention == "sine":
        apply_kinetic_sine(state.amplitudes, state.grid, mass, out=result.amplitudes)
    elif convention == "fourier":
        apply_kinetic_fourier(state.amplitudes, state.grid, mass, out=result.amplitudes)
    else:
        raise ValueError(f"unknown convention {convention!r}")
    return result


def kinetic_matrix_sine(grid: RadialGrid, mass: float) -> np.ndarray:
    """Dense kinetic matrix over the interior points, hard-wall convention.

    Closed-form sine DVR for a box of length L with N interior points;
    identical (to roundoff) to sandwiching diag(k_n^2/2m) between type-I
    sine transforms.
    """
    n = grid.n_interior
    length = grid.box_length
    pref = np.pi**2 / (4.0 * mass * length**2)
    j = np.arange(1, n + 1)
    jj, kk = np.meshgrid(j, j, indexing="ij")
    np1 = n + 1
    with np.errstate(divide="ignore"):
        off = (-1.0) ** (jj - kk) * (
            1.0 / np.sin(np.pi * (jj - kk) / (2 * np1)) ** 2
            - 1.0 / np.sin(np.pi * (jj + kk) / (2 * np1)) ** 2
        )
    tmat = pref * off
    diag = (2.0 * np1**2 + 1.0) / 3.0 - 1.0 / np.sin(np.pi * j / np1) ** 2
    tmat[np.arange(n), np.arange(n)] = pref * diag
    return tmat
