# thermal.py
#
# Thermal random-phase wavefunction ensembles for the electronic ground
# state of the colliding pair.
#
# The initial density operator at temperature T is represented by N
# random-phase realizations per sampled partial wave J.  Averaging
# expectation values over realizations with partial-wave weights
#
#     P_J = (2J+1) Z_J^{R_max} / Z
#
# reconstructs the canonical thermal average; the deviation of any
# estimate from its mean scales as 1/sqrt(N).  Three constructions are
# implemented:
#
#   grid      random phase e^{i theta} on every (interior) grid point,
#             then half-Boltzmann imaginary-time propagation
#             exp(-(beta/2) H_g^J).  The realization stays unnormalized;
#             its expectation values carry the 1/(h Z_J) convention
#             factor (value_scale below).  Slowest convergence; shipped
#             for completeness, not used in production runs.
#   eigen     sum of hard-wall eigenstates |n,J> with amplitudes
#             e^{-(beta/2) E_nJ + i theta} kept while
#             e^{-(beta/2) E} > weight_cutoff, normalized by
#             sqrt(Z_J^{R_max}).  Fastest convergence; filters can drop
#             bound states and short-lived shape resonances.
#   gaussian  thermal-width Gaussian at R0 far outside the interaction
#             region, dephased by a random free-evolution time tau_k
#             (projected path: phase e^{-i E tau_k} on each eigenstate;
#             propagated path: real-time Chebyshev propagation).  Its
#             normalized realizations coincide with eigen ones at large
#             J and large boxes but carry no bound-state or resonance
#             amplitude.
#
# Random numbers are counter-based per (method, J, k): every realization
# is reproducible in isolation from the master seed.

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.integrate
from scipy.special import erfc

from . import units
from .curves import CurveSet, interpolate
from .grid import RadialGrid, ChannelState, centrifugal_term, make_grid, single_channel_state
from .hamiltonian import GroundHamiltonian, CapSpec, assemble_ground
from .propagator import chebyshev_imag, chebyshev_real_step, estimate_spectral_range, imag_time_plan, real_time_plan
from .spectral import SpectralDecomposition, diagonalize_partial_wave, find_shape_resonances, tag_resonances

_METHODS = ("grid", "eigen", "gaussian-projected", "gaussian-propagated")
_METHOD_ID = {m: i for i, m in enumerate(_METHODS)}
_FILTERS = ("all", "no-bound", "no-bound-no-resonance")


class EmptyEnsembleError(ValueError):
    """No basis states survive the thermal cutoff and state filter."""


class TruncationError(RuntimeError):
    """A truncated sum (J ladder or state sum) has not converged."""


@dataclass(frozen=True)
class EnsembleSpec:
    """Thermal ensemble parameters.

    weight_cutoff is the threshold on e^{-(beta/2) E_nJ}; state_filter
    is one of all | no-bound | no-bound-no-resonance; r0 is required for
    the gaussian methods and must sit far outside the interaction
    region.
    """

    temperature_k: float
    n_realizations: int
    j_max: int
    j_stride: int = 5
    method: str = "eigen"
    weight_cutoff: float = 1e-8
    state_filter: str = "all"
    seed: int = 1
    r0: float | None = None

    def __post_init__(self):
        if self.n_realizations < 1:
            raise ValueError("need at least one realization")
        if not 0.0 < self.weight_cutoff < 1.0:
            raise ValueError("weight_cutoff must be in (0, 1)")
        if self.j_stride < 1:
            raise ValueError("j_stride must be >= 1")
        if self.method not in _METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.state_filter not in _FILTERS:
            raise ValueError(f"unknown state filter {self.state_filter!r}")
        if self.method.startswith("gaussian") and self.r0 is None:
            raise ValueError("gaussian methods need r0")

    @property
    def beta(self) -> float:
        return units.beta_from_kelvin(self.temperature_k)

    @property
    def j_values(self) -> np.ndarray:
        return np.arange(0, self.j_max + 1, self.j_stride)

    @property
    def e_cutoff(self) -> float:
        """Energy where e^{-(beta/2) E} falls to weight_cutoff."""
        return 2.0 * math.log(1.0 / self.weight_cutoff) / self.beta

    def rng(self, j: int, k: int) -> np.random.Generator:
        """Counter-based generator for realization (k, J)."""
        ss = np.random.SeedSequence(entropy=self.seed,
                                    spawn_key=(_METHOD_ID[self.method], j, k))
        return np.random.default_rng(ss)


def integer_sum_windows(j_values) -> np.ndarray:
    """Window sizes turning a sampled-J sum into an integer-J sum.

    Sum_{J=J0..JK} f(J) ~ sum_i w_i f(J_i) for samples J_0 < ... < J_K:
    trapezoid windows with half-integer end corrections, exact for
    constant f.
    """
    j = np.asarray(j_values, dtype=float)
    if j.size == 1:
        return np.ones(1)
    w = np.empty(j.size)
    w[1:-1] = 0.5 * (j[2:] - j[:-2])
    w[0] = 0.5 * (j[1] - j[0]) + 0.5
    w[-1] = 0.5 * (j[-1] - j[-2]) + 0.5
    return w


@dataclass
class Realization:
    """One random-phase realization at fixed (k, J).

    weight is the stride-corrected partial-wave weight used in thermal
    sums (window * P_J); window is kept separately for the purity
    corrections.  value_scale multiplies raw expectation values (1 for
    the normalized methods, 1/(h Z_J) for the unnormalized grid method).
    seed_key records the counter-based RNG address for audit.
    """

    k: int
    J: int
    state: ChannelState
    weight: float
    window: float
    method: str
    value_scale: float = 1.0
    seed_key: tuple = ()


# -- partition functions -------------------------------------------------------

def classical_zj(j, beta: float, mass: float, r_max: float):
    """Closed-form classical partial-wave configuration integral.

    Z_J^{R_max} = int_0^{R_max} exp(-beta J^2/(2 m R^2)) dR
                = R_max e^{-beta J^2/(2 m R_max^2)}
                  - sqrt(pi beta J^2 / 2m) erfc(sqrt(beta J^2/(2m))/R_max)
    """
    j = np.asarray(j, dtype=float)
    a = beta * j * j / (2.0 * mass)
    sq = np.sqrt(a)
    out = r_max * np.exp(-a / r_max**2) - np.sqrt(np.pi) * sq * erfc(sq / r_max)
    return out if out.shape else float(out)


def momentum_prefactor_1d(beta: float, mass: float) -> float:
    """Radial-momentum phase-space factor (1/2) sqrt(2 m / (pi beta)).

    Converts a classical configuration integral (a length) into the
    dimensionless quantum partition function of one partial wave:
    Z_J^{qm} ~ q1d * Z_J^{cl}.
    """
    return 0.5 * math.sqrt(2.0 * mass / (math.pi * beta))


def partition_function_classical(temperature_k: float, r_max: float, mass: float,
                                 j_max: float | None = None):
    """Classical partition function of the box and its per-J integrand.

    Z_cl = (4 pi^2/h^3) sqrt(2 m pi/beta) int dJ 2J Z_J^{R_max}; in
    atomic units h = 2 pi.  Returns (z_cl, zj_fn) with zj_fn the
    closed-form Z_J evaluator.
    """
    beta = units.beta_from_kelvin(temperature_k)
    j_scale = r_max * math.sqrt(2.0 * mass / beta)
    j_hi = 8.0 * j_scale if j_max is None else float(j_max)
    val, _ = scipy.integrate.quad(
        lambda j: 2.0 * j * classical_zj(j, beta, mass, r_max),
        0.0, j_hi, limit=400)
    pref = (1.0 / (2.0 * math.pi)) * math.sqrt(2.0 * mass * math.pi / beta)
    return pref * val, lambda j: classical_zj(j, beta, mass, r_max)


def partition_function_box(j_values, energies_by_j, temperature_k: float,
                           eps: float = 1e-8, tail_tol: float = 1e-3):
    """Quantum box partition function from per-J eigenvalue ladders.

    Z = sum_J (2J+1) sum_n e^{-beta E_nJ}, states truncated once
    e^{-beta E} <= eps, the sampled-J sum corrected to an integer sum by
    trapezoid windows.  Raises TruncationError when the last sampled J
    still contributes more than tail_tol of the total.

    Returns (z_box, z_j array aligned with j_values).
    """
    beta = units.beta_from_kelvin(temperature_k)
    j_values = np.asarray(j_values)
    z_j = np.empty(j_values.size)
    for i, energies in enumerate(energies_by_j):
        w = np.exp(-beta * np.asarray(energies))
        z_j[i] = float(np.sum(w[w > eps]))
    windows = integer_sum_windows(j_values)
    contrib = windows * (2.0 * j_values + 1.0) * z_j
    z_box = float(np.sum(contrib))
    if j_values.size > 1 and contrib[-1] > tail_tol * z_box:
        raise TruncationError(
            "J ladder not converged: last sampled J contributes "
            f"{contrib[-1] / z_box:.2e} of Z (tol {tail_tol:.1e})")
    return z_box, z_j


def partition_grid(r_min: float, r_max: float, mass: float, beta: float,
                   kt_factor: float = 12.0, n_max: int = 4097) -> RadialGrid:
    """Coarse internal grid for Z ladders: supports E up to kt_factor/beta."""
    from .grid import fast_n_points
    e_need = kt_factor / beta
    h = math.pi / math.sqrt(2.0 * mass * e_need)
    n = min(fast_n_points(int(math.ceil((r_max - r_min) / h)) + 1), n_max)
    return make_grid(r_min, r_max, max(n, 16))


def z_ladder_j_values(r_max: float, mass: float, beta: float,
                      n_samples: int = 40) -> np.ndarray:
    """Sampled J ladder reaching the Gaussian decay of (2J+1) Z_J."""
    j_scale = r_max * math.sqrt(2.0 * mass / beta)
    j_top = int(math.ceil(3.2 * j_scale))
    stride = max(1, int(j_top / n_samples))
    return np.arange(0, j_top + stride, stride)


def quantum_z_box(curves: CurveSet, r_min: float, r_max: float,
                  temperature_k: float, eps: float = 1e-8,
                  n_samples: int = 40):
    """Z_box from eigen sums on an internal coarse grid, full J ladder."""
    beta = units.beta_from_kelvin(temperature_k)
    mass = curves.reduced_mass
    pgrid = partition_grid(r_min, r_max, mass, beta)
    jlad = z_ladder_j_values(r_max, mass, beta, n_samples=n_samples)
    v0 = interpolate(curves.ground, pgrid)
    energies = []
    for j in jlad:
        veff = v0 + centrifugal_term(pgrid, int(j), mass)
        dec = diagonalize_partial_wave(veff, pgrid, mass,
                                       asymptote=curves.ground.asymptote,
                                       want_vectors=False)
        energies.append(dec.energies)
    return partition_function_box(jlad, energies, temperature_k, eps=eps)[0]


# -- realization builders --------------------------------------------------------

def grid_random_state(J: int, grid: RadialGrid, rng) -> ChannelState:
    """Unit-amplitude random phase at every interior grid point."""
    theta = rng.uniform(0.0, 2.0 * np.pi, grid.n_interior)
    amps = np.zeros(grid.n_points, dtype=np.complex128)
    amps[1:-1] = np.exp(1j * theta)
    return single_channel_state(grid, amps, J=J)


def thermalize(state: ChannelState, ham: GroundHamiltonian, beta: float,
               plan=None) -> ChannelState:
    """exp(-(beta/2) H_g^J)|psi>, unnormalized."""
    return chebyshev_imag(state, ham, 0.5 * beta, plan=plan)


def eigen_random_state(J: int, decomp: SpectralDecomposition, beta: float,
                       eps: float, state_filter: str, rng) -> ChannelState:
    """Normalized eigenfunction-based random-phase realization.

    Amplitudes e^{-(beta/2)E + i theta} on the filtered states with
    e^{-(beta/2)(E - asymptote)} > eps, divided by sqrt(Z_J^{R_max}).
    The filters drop states from the sum but never change the
    normalization, so filtered densities and yields stay on the same
    absolute scale as unfiltered ones.  Energies are referenced to the
    asymptote internally; the state is identical to the absolute-energy
    convention.
    """
    e_rel = decomp.energies - decomp.asymptote
    boltz_half = np.exp(-0.5 * beta * e_rel)
    z_rel = float(np.sum(boltz_half**2))
    keep = decomp.filter_indices(state_filter)
    keep = keep[boltz_half[keep] > eps]
    if keep.size == 0:
        raise EmptyEnsembleError(
            f"no states at J={J} survive cutoff {eps:g} and filter {state_filter!r}")
    theta = rng.uniform(0.0, 2.0 * np.pi, keep.size)
    coeff = boltz_half[keep] * np.exp(1j * theta) / math.sqrt(z_rel)
    amps = coeff @ decomp.vectors[keep].astype(complex)
    return single_channel_state(decomp.grid, amps, J=J)


def thermal_gaussian(grid: RadialGrid, mass: float, temperature_k: float,
                     r0: float) -> np.ndarray:
    """Normalized thermal-width Gaussian amplitudes at R0.

    |psi| ~ exp(-(R-R0)^2/(2 sigma^2)), sigma = 1/sqrt(2 m k_B T): the
    momentum content then carries Boltzmann weights e^{-beta E}.
    """
    beta = units.beta_from_kelvin(temperature_k)
    sigma = math.sqrt(beta / (2.0 * mass))
    amps = np.exp(-((grid.r - r0) ** 2) / (2.0 * sigma**2)).astype(np.complex128)
    amps[0] = amps[-1] = 0.0
    nrm = math.sqrt(float(np.sum(np.abs(amps) ** 2)) * grid.spacing)
    return amps / nrm


def gaussian_tau_bounds(mass: float, beta: float, r0: float) -> tuple:
    """Random-time window for the freely dephased Gaussian packets.

    tau must exceed both the thermal time beta/2 and the transit time of
    a thermal packet across R0; tau_min = 10 max(beta/2, R0 sqrt(m beta))
    with tau_max = 4 tau_min (heuristic margins).
    """
    tau_min = 10.0 * max(0.5 * beta, r0 * math.sqrt(mass * beta))
    return tau_min, 4.0 * tau_min


def validate_r0(curves: CurveSet, r0: float, temperature_k: float,
                tol: float = 1e-2):
    """R0 must sit where |V_ground| is negligible against k_B T."""
    v = abs(float(curves.ground(np.array([r0]))[0]) - curves.ground.asymptote)
    kt = units.KB_AU * temperature_k
    if v > tol * kt:
        raise ValueError(
            f"R0={r0} is inside the interaction region: |V(R0)| = {v:.3e} "
            f"hartree vs k_B T = {kt:.3e}")


def gaussian_random_state(J: int, grid: RadialGrid, mass: float,
                          temperature_k: float, r0: float, tau_k: float,
                          decomp: SpectralDecomposition | None = None,
                          ham: GroundHamiltonian | None = None,
                          path: str = "projected") -> ChannelState:
    """Thermal Gaussian dephased for time tau_k, normalized.

    projected: expand in the box continuum (n >= n0), multiply each
    component by e^{-i E tau_k}, reassemble.  propagated: real-time
    Chebyshev propagation under H_g^J.  Both paths produce the same
    density for the same tau_k.
    """
    amps = thermal_gaussian(grid, mass, temperature_k, r0)
    state = single_channel_state(grid, amps, J=J)
    if path == "projected":
        if decomp is None:
            raise ValueError("projected path needs the spectral decomposition")
        vecs = decomp.vectors[decomp.n0:]
        c = (vecs @ amps) * grid.spacing
        c *= np.exp(-1j * decomp.energies[decomp.n0:] * tau_k)
        out = c @ vecs.astype(complex)
        nrm = math.sqrt(float(np.vdot(out, out).real) * grid.spacing)
        return single_channel_state(grid, out / nrm, J=J)
    if path == "propagated":
        if ham is None:
            raise ValueError("propagated path needs the ground Hamiltonian")
        out = chebyshev_real_step(state, ham, tau_k)
        n = math.sqrt(float(np.vdot(out.amplitudes, out.amplitudes).real) * grid.spacing)
        out.amplitudes /= n
        return out
    raise ValueError(f"unknown gaussian path {path!r}")


def momentum_delta_state(J: int, grid: RadialGrid, rng, beta: float,
                         mass: float) -> ChannelState:
    """Momentum-basis random-phase state with kinetic-only Boltzmann weights.

    Negative control: random phases on momentum modes with weights
    e^{-(beta/2) k^2/2m} reconstruct the thermal density only where the
    potential is flat and fail in the interaction region, so no
    production method uses this variant (tests document the failure).
    """
    k = grid.sine_momenta()
    theta = rng.uniform(0.0, 2.0 * np.pi, k.size)
    mode_amp = np.exp(1j * theta - 0.5 * beta * k**2 / (2.0 * mass))
    x = np.pi * np.outer(np.arange(1, grid.n_interior + 1),
                         np.arange(1, grid.n_interior + 1)) / (grid.n_interior + 1)
    amps = np.zeros(grid.n_points, dtype=np.complex128)
    amps[1:-1] = mode_amp @ np.sin(x)
    return single_channel_state(grid, amps, J=J)


def partial_wave_weight(j: int, method: str, *, z_j: float | None = None,
                        z_total: float | None = None, beta: float | None = None,
                        mass: float | None = None, r0: float | None = None,
                        box_length: float | None = None,
                        stride: float = 1.0) -> float:
    """Stride-corrected partial-wave weight P_J for one sampled J.

    eigen/grid: (2J+1) Z_J^{R_max} / Z with the method's Z_J.  gaussian:
    the packets are normalized in the box but positioned at R0, so the
    Boltzmann factor of the centrifugal energy is evaluated at R0 while
    the box-volume prefactor stays:

        P_J = (2J+1) q1d L_box e^{-beta J^2/(2 m R0^2)} / Z.

    (Replacing R_max by R0 everywhere in the classical closed form would
    leave eigen and gaussian yields apart by a systematic box-length /
    R0 factor; with the form above they converge at large J.)
    """
    if method in ("eigen", "grid"):
        if z_j is None or z_total is None:
            raise ValueError("eigen/grid weights need z_j and z_total")
        return stride * (2.0 * j + 1.0) * z_j / z_total
    if method.startswith("gaussian"):
        if None in (z_total, beta, mass, r0, box_length):
            raise ValueError("gaussian weights need beta, mass, r0, box_length, z_total")
        q1d = momentum_prefactor_1d(beta, mass)
        zj_eff = q1d * box_length * math.exp(-beta * j * j / (2.0 * mass * r0**2))
        return stride * (2.0 * j + 1.0) * zj_eff / z_total
    raise ValueError(f"unknown method {method!r}")


# -- ensemble construction --------------------------------------------------------

@dataclass
class EnsemblePlan:
    """Shared, immutable data for building one thermal ensemble.

    Realizations are produced per J (realizations_for) so large runs can
    stream: build a J block, propagate it, reduce, release.
    """

    spec: EnsembleSpec
    curves: CurveSet
    grid: RadialGrid
    z_total: float
    z_mode: str
    v_ground: np.ndarray = field(default=None, repr=False)
    resonance_cap: CapSpec = field(default_factory=CapSpec)
    lifetime_cutoff_ns: float = 10.0

    def __post_init__(self):
        if self.v_ground is None:
            self.v_ground = interpolate(self.curves.ground, self.grid)
        e_grid = self.grid.max_kinetic_energy(self.curves.reduced_mass)
        if e_grid < self.spec.e_cutoff:
            warnings.warn(
                "grid supports kinetic energies up to "
                f"{e_grid:.3e} hartree but the thermal cutoff asks for "
                f"{self.spec.e_cutoff:.3e}; refine n_points", stacklevel=2)

    @property
    def mass(self) -> float:
        return self.curves.reduced_mass

    @property
    def windows(self) -> np.ndarray:
        return integer_sum_windows(self.spec.j_values)

    def v_eff(self, j: int) -> np.ndarray:
        return self.v_ground + centrifugal_term(self.grid, j, self.mass)

    def decomposition(self, j: int, want_vectors: bool = True) -> SpectralDecomposition:
        """Fine-grid eigenpairs at J, resonance-tagged when filtering needs it."""
        dec = diagonalize_partial_wave(
            self.v_eff(j), self.grid, self.mass,
            asymptote=self.curves.ground.asymptote,
            e_ceiling=self.curves.ground.asymptote + self.spec.e_cutoff,
            want_vectors=want_vectors)
        dec.J = j
        if want_vectors and self.spec.state_filter == "no-bound-no-resonance":
            rows = self._cap_rows(j)
            tag_resonances(dec, self.v_eff(j), resonances=rows,
                           lifetime_cutoff_ns=self.lifetime_cutoff_ns)
        return dec

    def _cap_rows(self, j: int):
        """CAP resonances on a coarse internal grid (positions and widths)."""
        beta = self.spec.beta
        pgrid = partition_grid(self.grid.r_min, self.grid.r_max, self.mass, beta)
        veff = interpolate(self.curves.ground, pgrid) + centrifugal_term(pgrid, j, self.mass)
        return find_shape_resonances(veff, pgrid, self.mass, self.resonance_cap,
                                     J=j, asymptote=self.curves.ground.asymptote)

    def realizations_for(self, j: int, window: float):
        """Build the N realizations of one partial wave."""
        spec = self.spec
        beta = spec.beta
        method = spec.method
        out = []
        if method == "eigen":
            dec = self.decomposition(j)
            z_j = float(np.sum(np.exp(-beta * dec.energies)))
            weight = partial_wave_weight(j, method, z_j=z_j, z_total=self.z_total,
                                         stride=window)
            for k in range(spec.n_realizations):
                rng = spec.rng(j, k)
                state = eigen_random_state(j, dec, beta, spec.weight_cutoff,
                                           spec.state_filter, rng)
                out.append(Realization(k=k, J=j, state=state, weight=weight,
                                       window=window, method=method,
                                       seed_key=(spec.seed, _METHOD_ID[method], j, k)))
            return out

        if method == "grid":
            ham = assemble_ground(j, self.curves, self.grid, v_clip=0.5)
            e_min, e_max = estimate_spectral_range(ham)
            plan = imag_time_plan(e_min, e_max, 0.5 * beta)
            states = []
            for k in range(spec.n_realizations):
                rng = spec.rng(j, k)
                raw = grid_random_state(j, self.grid, rng)
                states.append(thermalize(raw, ham, beta, plan=plan))
            h = self.grid.spacing
            # ensemble-mean norm^2/h estimates Z_J without diagonalization
            z_hat = float(np.mean([np.vdot(s.amplitudes, s.amplitudes).real
                                   for s in states]))
            weight = partial_wave_weight(j, method, z_j=z_hat, z_total=self.z_total,
                                         stride=window)
            scale = 1.0 / (h * z_hat)
            for k, s in enumerate(states):
                out.append(Realization(k=k, J=j, state=s, weight=weight,
                                       window=window, method=method,
                                       value_scale=scale,
                                       seed_key=(spec.seed, _METHOD_ID[method], j, k)))
            return out

        # gaussian paths
        validate_r0(self.curves, spec.r0, spec.temperature_k)
        weight = partial_wave_weight(j, method, z_total=self.z_total, beta=beta,
                                     mass=self.mass, r0=spec.r0,
                                     box_length=self.grid.box_length,
                                     stride=window)
        tau_lo, tau_hi = gaussian_tau_bounds(self.mass, beta, spec.r0)
        dec = ham = plan = None
        if method == "gaussian-projected":
            dec = self.decomposition(j)
        else:
            ham = assemble_ground(j, self.curves, self.grid, v_clip=0.5)
        for k in range(spec.n_realizations):
            rng = spec.rng(j, k)
            tau_k = rng.uniform(tau_lo, tau_hi)
            state = gaussian_random_state(
                j, self.grid, self.mass, spec.temperature_k, spec.r0, tau_k,
                decomp=dec, ham=ham,
                path="projected" if method == "gaussian-projected" else "propagated")
            out.append(Realization(k=k, J=j, state=state, weight=weight,
                                   window=window, method=method,
                                   seed_key=(spec.seed, _METHOD_ID[method], j, k)))
        return out

    def iter_blocks(self):
        """Yield (J, window, realizations) over the sampled partial waves."""
        for j, w in zip(self.spec.j_values, self.windows):
            yield int(j), float(w), self.realizations_for(int(j), float(w))


def make_plan(spec: EnsembleSpec, curves: CurveSet, grid: RadialGrid,
              z_mode: str = "auto", z_samples: int = 40) -> EnsemblePlan:
    """Compute the shared weight normalization and wrap it in a plan.

    z_mode quantum: Z from coarse-grid eigen sums over the full J ladder
    (the Eq-consistent P_J denominator); classical: erfc closed form.
    auto picks quantum for the eigen/grid methods and classical for the
    gaussian ones.
    """
    if z_mode == "auto":
        z_mode = "quantum" if spec.method in ("eigen", "grid") else "classical"
    if z_mode == "quantum":
        z_total = quantum_z_box(curves, grid.r_min, grid.r_max,
                                spec.temperature_k, eps=min(spec.weight_cutoff, 1e-6),
                                n_samples=z_samples)
    elif z_mode == "classical":
        z_cl, _ = partition_function_classical(spec.temperature_k, grid.r_max,
                                               curves.reduced_mass)
        z_total = z_cl
    else:
        raise ValueError(f"unknown z_mode {z_mode!r}")
    return EnsemblePlan(spec=spec, curves=curves, grid=grid,
                        z_total=z_total, z_mode=z_mode)


def build_ensemble(spec: EnsembleSpec, curves: CurveSet, grid: RadialGrid,
                   z_mode: str = "auto") -> list:
    """Materialize all realizations (small runs and tests)."""
    plan = make_plan(spec, curves, grid, z_mode=z_mode)
    out = []
    for _, _, block in plan.iter_blocks():
        out.extend(block)
    return out


# -- reductions --------------------------------------------------------------------

def thermal_expectation(realizations, values):
    """Thermally averaged expectation from per-realization values.

    <A>_T = (1/N) sum_k sum_J P_J a_kJ with the stride-corrected P_J
    stored on the realizations, a_kJ = value_scale * values[i].  Returns
    (mean, standard_error); the standard error combines per-J sample
    variances of the mean, shrinking as 1/sqrt(N).
    """
    values = np.asarray(values, dtype=float)
    if len(values) != len(realizations):
        raise ValueError("need one value per realization")
    by_j: dict[int, list] = {}
    for realz, val in zip(realizations, values):
        by_j.setdefault(realz.J, []).append((realz.weight, val * realz.value_scale))
    total = 0.0
    var = 0.0
    for _, entries in sorted(by_j.items()):
        w = entries[0][0]
        a = np.array([v for _, v in entries])
        n = a.size
        total += w * a.mean()
        if n > 1:
            var += w**2 * a.var(ddof=1) / n
    return total, math.sqrt(var)


def thermal_pair_density(realizations, n_realizations: int):
    """Thermal pair density table (R, rho(R)/R^2).

    rho(R) = (1/N) sum_kJ P_J value_scale |psi_kJ(R)|^2; bound, trapped
    and scattering amplitudes all contribute according to the ensemble
    filters used at construction.
    """
    if not realizations:
        raise ValueError("no realizations")
    grid = realizations[0].state.grid
    dens = np.zeros(grid.n_points)
    for realz in realizations:
        amp2 = np.abs(realz.state.amplitudes[0]) ** 2
        dens += (realz.weight * realz.value_scale / n_realizations) * amp2
    return grid.r, dens / grid.r**2
