# observables.py
#
# Excited-state populations, projection onto the excited rovibrational
# eigenbasis, the yield-normalized excited density matrix, purity and
# dynamical coherence, and the absolute volume/density scalings that
# connect the computation box to the experimental cell.
#
# The density matrix is stored per J block: two-photon transitions with
# Delta J = 0 create no rotational coherence, so cross-J elements vanish
# identically and the matrix is block diagonal in J.  Because partial
# waves are sampled with a stride, quadratic functionals (purity,
# coherence) must un-weight the stride windows: each block enters
# tr(rho^2) once per represented J, i.e. divided by its window.

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import units
from .grid import ChannelState
from .spectral import SpectralDecomposition


class ProjectionResidualError(RuntimeError):
    """Excited amplitude outside the retained eigenbasis; raise N_m."""


@dataclass(frozen=True)
class ExperimentScaling:
    """Box-to-cell probability scaling.

    p_box = rho * V_box is the probability of one atom inside the
    computation box of radius R_max at the experimental atom density
    rho; purity values inside the box scale with p_box^2.
    """

    density_cm3: float
    r_max_bohr: float

    @property
    def v_box_cm3(self) -> float:
        r_cm = self.r_max_bohr * units.BOHR_TO_ANGSTROM * 1e-8
        return 4.0 / 3.0 * math.pi * r_cm**3

    @property
    def p_box(self) -> float:
        return self.density_cm3 * self.v_box_cm3

    @property
    def p_box_sq(self) -> float:
        return self.p_box**2


def excited_population(state: ChannelState, channel: str = "Pi_g") -> float:
    """Squared norm of the excited-channel component of one realization."""
    amp = state.channel(channel)
    return float(np.vdot(amp, amp).real * state.grid.spacing)


def channel_populations(state: ChannelState) -> dict:
    h = state.grid.spacing
    return {lab: float(np.vdot(state.amplitudes[i], state.amplitudes[i]).real * h)
            for i, lab in enumerate(state.channel_labels)}


def project_excited_eigenbasis(state: ChannelState, decomp: SpectralDecomposition,
                               n_m: int, channel: str = "Pi_g",
                               residual_tol: float | None = None):
    """Coefficients of the excited component in the rovibrational eigenbasis.

    c_m = int psi_e(R) phi_mJ(R) dR for m < n_m; returns (c, residual)
    with residual the squared norm outside the retained span.  When
    residual_tol is given and residual > residual_tol * |psi_e|^2, a
    ProjectionResidualError asks the caller to raise n_m.
    """
    n_m = min(n_m, decomp.vectors.shape[0])
    amp = state.channel(channel)
    c = (decomp.vectors[:n_m] @ amp) * state.grid.spacing
    norm_e = float(np.vdot(amp, amp).real * state.grid.spacing)
    residual = norm_e - float(np.sum(np.abs(c) ** 2))
    if residual_tol is not None and norm_e > 0.0 and residual > residual_tol * norm_e:
        raise ProjectionResidualError(
            f"projection residual {residual / norm_e:.2e} of the excited norm "
            f"exceeds {residual_tol:.1e}; raise N_m beyond {n_m}")
    return c, residual


@dataclass
class ExcitedDensityMatrix:
    """Yield-normalized density matrix of the photoassociated molecules.

    blocks[J] is the J block in the excited eigenbasis; the overall
    trace is 1 after yield normalization.  windows[J] are the J-stride
    windows used for quadratic functionals.  yield_ is the thermally
    averaged excited population <P_e> used for normalization; p_box_sq
    carries the box-probability scaling for reporting absolute purities.
    """

    blocks: dict
    windows: dict
    yield_: float
    basis: list = field(default_factory=list)
    p_box_sq: float | None = None

    def trace(self) -> float:
        return float(sum(np.trace(b).real for b in self.blocks.values()))

    def full_matrix(self):
        """Block-diagonal assembly over (m, J) labels (CSV dumps, checks)."""
        sizes = [b.shape[0] for _, b in sorted(self.blocks.items())]
        n = sum(sizes)
        out = np.zeros((n, n), dtype=complex)
        pos = 0
        for j in sorted(self.blocks):
            b = self.blocks[j]
            out[pos:pos + b.shape[0], pos:pos + b.shape[0]] = b
            pos += b.shape[0]
        return out

    def purity(self) -> float:
        """Tr[rho^2] corrected for J-stride sampling (window un-weighting)."""
        return float(sum(np.sum(np.abs(b) ** 2) / self.windows[j]
                         for j, b in self.blocks.items()))

    def dynamical_coherence(self) -> float:
        """Off-diagonal (energy-basis) part of the purity."""
        total = 0.0
        for j, b in self.blocks.items():
            off = np.sum(np.abs(b) ** 2) - np.sum(np.abs(np.diag(b)) ** 2)
            total += off / self.windows[j]
        return float(total)

    def scaled_purity(self) -> float | None:
        if self.p_box_sq is None:
            return None
        return self.p_box_sq * self.purity()


def purity(dm) -> float:
    """Tr[rho^2] = sum |rho_ij|^2 of a density matrix or block container."""
    if isinstance(dm, ExcitedDensityMatrix):
        return dm.purity()
    return float(np.sum(np.abs(np.asarray(dm)) ** 2))


def dynamical_coherence(dm) -> float:
    """C = sum_{i != j} |rho_ij|^2 = purity - sum_i rho_ii^2."""
    if isinstance(dm, ExcitedDensityMatrix):
        return dm.dynamical_coherence()
    dm = np.asarray(dm)
    return float(np.sum(np.abs(dm) ** 2) - np.sum(np.abs(np.diag(dm)) ** 2))


class DensityAccumulator:
    """Accumulates weighted coefficient outer products into the J blocks.

    add() is a commutative, associative weighted sum of rank-1 terms;
    parallel partial accumulators can be merged (merge()) and results
    are reduced in sorted-J order for the deterministic regression mode.
    """

    def __init__(self, n_realizations: int):
        self.n = n_realizations
        self._blocks: dict = {}
        self._windows: dict = {}
        self._pw: dict = {}
        self._yield = 0.0

    def add(self, j: int, window: float, p_j: float, coeffs: np.ndarray,
            population: float):
        """One realization: p_j is the raw (un-windowed) partial-wave weight."""
        n_m = coeffs.shape[0]
        if j not in self._blocks:
            self._blocks[j] = np.zeros((n_m, n_m), dtype=complex)
            self._windows[j] = window
            self._pw[j] = p_j
        elif self._blocks[j].shape[0] < n_m:
            old = self._blocks[j]
            grown = np.zeros((n_m, n_m), dtype=complex)
            grown[:old.shape[0], :old.shape[0]] = old
            self._blocks[j] = grown
        self._blocks[j][:n_m, :n_m] += np.outer(coeffs, np.conj(coeffs))
        self._yield += window * p_j * population / self.n

    def merge(self, other: "DensityAccumulator"):
        if other.n != self.n:
            raise ValueError("accumulators built for different N")
        for j in sorted(other._blocks):
            if j in self._blocks:
                a, b = self._blocks[j], other._blocks[j]
                if b.shape[0] > a.shape[0]:
                    a, b = b, a
                a[:b.shape[0], :b.shape[0]] += b
                self._blocks[j] = a
            else:
                self._blocks[j] = other._blocks[j]
                self._windows[j] = other._windows[j]
                self._pw[j] = other._pw[j]
        self._yield += other._yield
        return self

    def finalize(self, scaling: ExperimentScaling | None = None) -> ExcitedDensityMatrix:
        """Yield-normalize: rho = (1/<P_e>) (1/N) sum_kJ w_J P_J c c^dag.

        Blocks are normalized by the trace of the accumulated matrix
        itself (so the result has unit trace to roundoff even when a
        small projection residual makes sum|c|^2 < <P_e>); the
        population-based <P_e> is reported as yield_.
        """
        if self._yield <= 0.0:
            raise ZeroDivisionError("zero photoassociation yield: nothing to normalize")
        raw = {j: self._windows[j] * self._pw[j] / self.n * b
               for j, b in self._blocks.items()}
        trace = sum(float(np.trace(b).real) for b in raw.values())
        if trace <= 0.0:
            raise ZeroDivisionError("zero projected excited amplitude")
        blocks = {}
        basis = []
        for j in sorted(raw):
            blocks[j] = raw[j] / trace
            basis.extend((m, j) for m in range(raw[j].shape[0]))
        return ExcitedDensityMatrix(
            blocks=blocks, windows=dict(self._windows), yield_=self._yield,
            basis=basis,
            p_box_sq=None if scaling is None else scaling.p_box_sq)


def build_excited_density(realization_coeffs, n_realizations: int,
                          scaling: ExperimentScaling | None = None) -> ExcitedDensityMatrix:
    """Assemble the excited density matrix from projected realizations.

    realization_coeffs yields (J, window, P_J, coefficients, population)
    tuples from a single consistent ensemble and evaluation time.
    """
    acc = DensityAccumulator(n_realizations)
    for j, window, p_j, coeffs, pop in realization_coeffs:
        acc.add(j, window, p_j, coeffs, pop)
    return acc.finalize(scaling=scaling)


def initial_ground_purity(weights_effective, windows,
                          scaling: ExperimentScaling | None = None):
    """Purity of the initial thermal ensemble from partial-wave weights.

    P_g^box = sum_J P_J^2 over integer J, evaluated from the sampled
    weights (weights_effective = window * P_J) with the window
    correction; P_g = p_box^2 * P_g^box when a scaling is given.
    """
    weights_effective = np.asarray(weights_effective, dtype=float)
    windows = np.asarray(windows, dtype=float)
    pg_box = float(np.sum(weights_effective**2 / windows))
    if scaling is None:
        return pg_box, None
    return pg_box, scaling.p_box_sq * pg_box
