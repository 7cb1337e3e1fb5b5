# hamiltonian.py
#
# Time-dependent five-channel pump Hamiltonian and single-channel
# partial-wave ground Hamiltonians.
#
# Channel layout (fixed):
#
#   0  X (singlet ground)           diagonal V_X + w^S_g(t,R)
#   1  Pi_g (two-photon excited)    V_e - 2 w_L + w^S_e(t,R)
#   2  upper diabatic 11            V_11 - 3 w_L + w^S_11(t,R)
#   3  upper diabatic 22            V_22 - 3 w_L + w^S_22(t,R)
#   4  Sigma_u+                     V_su - 3 w_L  (no Stark trace)
#
# Couplings: chi(t,R) = (1/4) E(t)^2 sum_ij eps_i eps_j M_ij(R) between
# channels 0<->1; mu_i(R) E(t) between 1 and 2+i (E* in the upper
# triangle, E in the lower, exact Hermitian pairing); V12(R)+w^S_12(t,R)
# between 2<->3.  Stark shifts are w^S = -(1/4)|E(t)|^2 alpha(w_L, R)
# using the isotropic polarizability trace.
#
# Rotating-frame choice: the two-photon rotating wave approximation with
# the X channel unshifted, the Pi_g channel lowered by 2 w_L and the
# three upper channels by 3 w_L.  In this frame every near-resonant gap
# is small and only the envelope E(t) (never the carrier) enters the
# couplings.
#
# Repulsive walls are clipped at a configurable level above the highest
# asymptote before the frame shift; populated energies stay far below
# the clip, and the clip keeps the spectral range (and with it the
# Chebyshev order) small.

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import units
from .backend import kernels
from .curves import CurveSet, interpolate
from .grid import (ChannelState, RadialGrid, apply_kinetic_sine,
                   centrifugal_term)

CHANNELS = ("X", "Pi_g", "u11", "u22", "Sigma_u")

GAUSS_LN2 = 4.0 * math.log(2.0)


@dataclass(frozen=True)
class PulseParameters:
    """Transform-limited-by-default Gaussian pump pulse.

    e0 is the peak field amplitude in a.u.; fwhm is the full width at
    half maximum of the *intensity* envelope |E|^2, in a.u. of time.
    phase is an optional callable phi(t) (radians); polarization
    components must satisfy sum |eps_i|^2 = 1.
    """

    e0: float
    fwhm: float
    omega_l: float
    t_center: float = 0.0
    phase: object = None
    polarization: tuple = (1.0,)

    def __post_init__(self):
        if self.fwhm <= 0.0:
            raise ValueError("fwhm must be positive")
        if self.omega_l <= 0.0:
            raise ValueError("omega_L must be positive")
        pol = np.asarray(self.polarization, dtype=float)
        if abs(np.sum(pol**2) - 1.0) > 1e-12:
            raise ValueError("polarization components must satisfy sum eps_i^2 = 1")

    @property
    def support_halfwidth(self) -> float:
        """Beyond 6 fwhm from t_center, chi and w^S vanish at double precision."""
        return 6.0 * self.fwhm


def make_pulse(fwhm_fs: float, lambda_nm: float, intensity_w_cm2: float | None = None,
               e0: float | None = None, t_center_fs: float = 0.0,
               phase=None, polarization=(1.0,)) -> PulseParameters:
    """Build PulseParameters from laboratory units.

    Exactly one of intensity_w_cm2 (peak intensity) or e0 (peak field,
    a.u.) must be given.
    """
    if (intensity_w_cm2 is None) == (e0 is None):
        raise ValueError("give exactly one of intensity_w_cm2 or e0")
    if e0 is None:
        e0 = intensity_to_field(intensity_w_cm2)
    return PulseParameters(
        e0=float(e0),
        fwhm=fwhm_fs * units.FS_TO_AU,
        omega_l=units.omega_from_nm(lambda_nm),
        t_center=t_center_fs * units.FS_TO_AU,
        phase=phase,
        polarization=tuple(np.atleast_1d(polarization)),
    )


def intensity_to_field(intensity_w_cm2: float) -> float:
    """Peak field E0 (a.u.) from peak intensity (W/cm^2), I = eps0 c E0^2 / 2."""
    return units.field_from_intensity(intensity_w_cm2)


def envelope(t, p: PulseParameters):
    """Complex field envelope E(t) = E0 exp(-4 ln2 (t-tc)^2/fwhm^2) e^{i phi(t)}.

    The Gaussian is the amplitude envelope of an intensity profile with
    the stated fwhm: |E(t_c +- fwhm/2)|^2 = E0^2/2.
    """
    t = np.asarray(t, dtype=float)
    s = p.e0 * np.exp(-0.5 * GAUSS_LN2 * (t - p.t_center) ** 2 / p.fwhm**2)
    if p.phase is not None:
        s = s * np.exp(1j * np.asarray(p.phase(t)))
    return s if s.shape else complex(s)


def polarization_contraction(profile, polarization) -> np.ndarray:
    """Contract a moment/polarizability profile with polarization components.

    ``profile`` is either a plain array (isotropic scalar already
    contracted; returned scaled by sum_ij eps_i eps_j delta_ij = 1) or a
    dict {(i, j): array} of tensor components.
    """
    pol = np.asarray(polarization, dtype=float)
    if isinstance(profile, dict):
        n = len(next(iter(profile.values())))
        out = np.zeros(n)
        for (i, j), comp in profile.items():
            out += pol[i] * pol[j] * np.asarray(comp, dtype=float)
        return out
    return np.asarray(profile, dtype=float)


def two_photon_coupling(t, m_profile, p: PulseParameters) -> np.ndarray:
    """chi(t, R) = (1/4) E(t)^2 sum_ij eps_i eps_j M_ij(R)."""
    e_t = envelope(t, p)
    m_eff = polarization_contraction(m_profile, p.polarization)
    return 0.25 * e_t**2 * m_eff.astype(complex)


def stark_shift(t, alpha_profile, p: PulseParameters) -> np.ndarray:
    """w^S(t, R) = -(1/4)|E(t)|^2 sum_ij eps_i eps_j alpha_ij(w_L, R)."""
    e_t = envelope(t, p)
    a_eff = polarization_contraction(alpha_profile, p.polarization)
    return -0.25 * np.abs(e_t) ** 2 * a_eff


def cap_potential(grid: RadialGrid, r_start: float, strength: float,
                  order: int = 2) -> np.ndarray:
    """Monomial complex absorbing potential.

    -i eta ((R - r_start)/(r_max - r_start))^n for R > r_start, zero
    otherwise.
    """
    if not grid.r_min < r_start < grid.r_max:
        raise ValueError("r_start must lie inside the grid")
    if strength <= 0.0:
        raise ValueError("CAP strength must be positive")
    if order not in (2, 3):
        raise ValueError("CAP order must be 2 or 3")
    return -1j * strength * cap_shape(grid, r_start, order)


def cap_shape(grid: RadialGrid, r_start: float, order: int = 2) -> np.ndarray:
    """Real monomial CAP profile W(R) in [0, 1] (the -i eta factor excluded)."""
    x = (grid.r - r_start) / (grid.r_max - r_start)
    return np.where(x > 0.0, x, 0.0) ** order


@dataclass(frozen=True)
class CapSpec:
    """CAP placement for propagation / resonance runs."""
    r_start_frac: float = 0.85      # r_start = r_min + frac*(r_max - r_min)
    strength: float = 1e-3          # eta, hartree
    order: int = 2

    def r_start(self, grid: RadialGrid) -> float:
        return grid.r_min + self.r_start_frac * (grid.r_max - grid.r_min)


@dataclass
class GroundHamiltonian:
    """Single-channel partial-wave Hamiltonian H = T + V(R) + J(J+1)/2mR^2.

    v_eff may be complex (CAP added to the diagonal).
    """

    grid: RadialGrid
    mass: float
    J: int
    v_eff: np.ndarray              # (n_points,) diagonal, hartree
    convention: str = "sine"

    def __post_init__(self):
        self.v_eff = np.ascontiguousarray(self.v_eff, dtype=np.complex128)

    def apply_raw(self, amps: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        """H acting on a (n_ch, n_points) amplitude array."""
        out = apply_kinetic_sine(amps, self.grid, self.mass, out=out)
        for c in range(amps.shape[0]):
            kernels.diag_accum(out[c], amps[c], self.v_eff)
        return out

    def __call__(self, state: ChannelState) -> ChannelState:
        result = state.zeros_like()
        self.apply_raw(state.amplitudes, out=result.amplitudes)
        return result


def assemble_ground(J: int, curves: CurveSet, grid: RadialGrid,
                    mass: float | None = None,
                    v_clip: float | None = None) -> GroundHamiltonian:
    """Partial-wave nuclear Hamiltonian of the electronic ground state.

    v_clip, when given, caps V + centrifugal at asymptote + v_clip
    (propagation use; diagonalization should stay unclipped).
    """
    mass = curves.reduced_mass if mass is None else mass
    v = interpolate(curves.ground, grid) + centrifugal_term(grid, J, mass)
    if v_clip is not None:
        v = np.minimum(v, curves.ground.asymptote + v_clip)
    return GroundHamiltonian(grid=grid, mass=mass, J=J, v_eff=v)


@dataclass
class PAHamiltonian:
    """Matrix-free five-channel pump Hamiltonian (rotating frame).

    Immutable per (J, run); apply(out, amps, t) is a pure function of
    its inputs and safe for concurrent use across realizations.
    """

    J: int
    grid: RadialGrid
    mass: float
    pulse: PulseParameters
    vdiag: np.ndarray             # (5, n) rot-frame potentials + centrifugal
    alpha: np.ndarray             # (5, n) polarizability traces (row 4 zero)
    m2: np.ndarray                # (n,) contracted two-photon moment
    mu: np.ndarray                # (3, n) dipole profiles
    v12: np.ndarray               # (n,)
    a12: np.ndarray               # (n,)
    cap_w: np.ndarray             # (n,) CAP shape, zeros when disabled
    cap_eta: float = 0.0
    channel_labels: tuple = CHANNELS

    def scalars(self, t: float):
        """Time-dependent coupling scalars (e2, i2, f) at time t."""
        e_t = envelope(t, self.pulse)
        return 0.25 * e_t * e_t, -0.25 * abs(e_t) ** 2, e_t

    def apply_raw(self, amps: np.ndarray, t: float,
                  out: np.ndarray | None = None) -> np.ndarray:
        out = apply_kinetic_sine(amps, self.grid, self.mass, out=out)
        e2, i2, f = self.scalars(t)
        kernels.pa_couple(out, amps, self.vdiag, self.alpha, self.m2, self.mu,
                          self.v12, self.a12, self.cap_w,
                          complex(e2), float(i2), complex(f),
                          -1j * self.cap_eta)
        return out

    def coupling_bound(self) -> float:
        """Upper bound on the coupling row-sum over all times (peak field)."""
        e0 = self.pulse.e0
        chi_max = 0.25 * e0**2 * np.max(np.abs(self.m2))
        mu_max = e0 * np.sum(np.max(np.abs(self.mu), axis=1))
        v12_max = np.max(np.abs(self.v12) + 0.25 * e0**2 * np.abs(self.a12))
        return chi_max + mu_max + v12_max

    def diagonal_bounds(self) -> tuple[float, float]:
        """(min, max) of the diagonal over the grid and all times."""
        stark_lo = -0.25 * self.pulse.e0**2 * np.maximum(self.alpha, 0.0)
        stark_hi = -0.25 * self.pulse.e0**2 * np.minimum(self.alpha, 0.0)
        lo = float(np.min(self.vdiag + stark_lo))
        hi = float(np.max(self.vdiag + stark_hi))
        return lo, hi


def apply_pa_hamiltonian(state: ChannelState, ham: PAHamiltonian,
                         t: float) -> ChannelState:
    """H_PA(t)|psi>: kinetic, diagonal and coupling terms of the pump matrix."""
    if state.channel_labels != ham.channel_labels:
        raise ValueError("state channel layout does not match the Hamiltonian")
    result = state.zeros_like()
    ham.apply_raw(state.amplitudes, t, out=result.amplitudes)
    return result


def assemble_pa(J: int, curves: CurveSet, grid: RadialGrid,
                pulse: PulseParameters, cap: CapSpec | None = None,
                v_clip: float = 0.5,
                omega_tol: float = 0.02) -> PAHamiltonian:
    """Build the five-channel pump Hamiltonian on a grid.

    The M(R) and alpha(R) input profiles are only valid at the laser
    frequency they were computed for; assembly refuses to run when the
    pulse frequency disagrees with the curve-set tag by more than
    omega_tol (relative).

    v_clip (hartree) is a ceiling on the rotating-frame diagonal
    (potential + centrifugal after the frame shift, referenced to the
    ground asymptote) and on |V12|.  Populated energies stay far below
    it while repulsive walls stop inflating the spectral range; the
    Chebyshev order scales with that range.
    """
    if abs(pulse.omega_l - curves.omega_l) > omega_tol * curves.omega_l:
        raise ValueError(
            "pulse omega_L differs from the frequency tag of the curve-set "
            f"M/alpha profiles by more than {omega_tol:.1%}")

    mass = curves.reduced_mass
    cent = centrifugal_term(grid, J, mass)
    ceiling = curves.ground.asymptote + v_clip
    wl = pulse.omega_l

    v11, v22, v12 = curves.diabatic_block(grid)
    v12 = np.clip(v12, -v_clip, v_clip)
    chans = [interpolate(curves.ground, grid),
             interpolate(curves.excited, grid),
             v11, v22,
             interpolate(curves.upper[2], grid)]
    shifts = (0.0, 2.0 * wl, 3.0 * wl, 3.0 * wl, 3.0 * wl)
    vdiag = np.empty((5, grid.n_points))
    for c in range(5):
        vdiag[c] = np.minimum(chans[c] - shifts[c] + cent, ceiling)

    pol = pulse.polarization
    alpha = np.zeros((5, grid.n_points))
    for c, key in enumerate(("g", "e", "11", "22")):
        alpha[c] = polarization_contraction(interpolate(curves.stark_traces[key], grid), pol)
    a12 = polarization_contraction(interpolate(curves.stark_traces["12"], grid), pol)
    m2 = polarization_contraction(interpolate(curves.two_photon_moment, grid), pol)
    mu = np.stack([interpolate(curves.dipoles[i], grid) for i in range(3)])

    if cap is not None:
        cap_w = cap_shape(grid, cap.r_start(grid), cap.order)
        cap_eta = cap.strength
    else:
        cap_w = np.zeros(grid.n_points)
        cap_eta = 0.0

    return PAHamiltonian(J=J, grid=grid, mass=mass, pulse=pulse,
                         vdiag=vdiag, alpha=alpha, m2=m2, mu=mu,
                         v12=v12, a12=a12, cap_w=cap_w, cap_eta=cap_eta)


def pa_state(grid: RadialGrid, J: int,
             ground_amps: np.ndarray | None = None) -> ChannelState:
    """Five-channel state, optionally with the X channel populated."""
    amps = np.zeros((5, grid.n_points), dtype=np.complex128)
    if ground_amps is not None:
        amps[0] = ground_amps
    return ChannelState(grid, CHANNELS, amps, J)
