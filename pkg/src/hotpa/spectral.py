# spectral.py
#
# Dense diagonalization of partial-wave ground Hamiltonians on the grid
# (the hard-wall eigenbasis used by the eigenfunction random-phase
# method), bound-state counting, and shape-resonance extraction with a
# complex absorbing potential.
#
# Per-J diagonalizations are independent; a J-scan fans out across
# workers and the resulting decompositions are immutable.

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import units
from .grid import RadialGrid, kinetic_matrix_sine
from .hamiltonian import CapSpec, cap_shape

TAG_BOUND = 0
TAG_CONTINUUM = 1
TAG_RESONANCE = 2


@dataclass
class SpectralDecomposition:
    """Eigenpairs of one partial-wave Hamiltonian on the grid.

    energies ascend; vectors (n_states, n_points) are grid-orthonormal
    (sum |phi|^2 * spacing = 1) with zero endpoints; n0 is the index of
    the first state at or above the asymptote (box-discretized
    continuum).  tags mark bound / continuum / resonance states; widths
    carry Gamma for resonance-tagged states (NaN otherwise).
    """

    J: int
    grid: RadialGrid
    mass: float
    asymptote: float
    energies: np.ndarray
    vectors: np.ndarray
    n0: int
    tags: np.ndarray = field(default=None)
    widths: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.tags is None:
            self.tags = np.where(self.energies < self.asymptote,
                                 TAG_BOUND, TAG_CONTINUUM)
        if self.widths is None:
            self.widths = np.full(self.energies.shape, np.nan)

    @property
    def n_states(self) -> int:
        return len(self.energies)

    def filter_indices(self, state_filter: str) -> np.ndarray:
        """Indices kept by an ensemble filter."""
        if state_filter == "all":
            keep = np.ones(self.n_states, dtype=bool)
        elif state_filter == "no-bound":
            keep = self.tags != TAG_BOUND
        elif state_filter == "no-bound-no-resonance":
            keep = (self.tags != TAG_BOUND) & (self.tags != TAG_RESONANCE)
        else:
            raise ValueError(f"unknown state filter {state_filter!r}")
        return np.nonzero(keep)[0]


def diagonalize_partial_wave(v_eff: np.ndarray, grid: RadialGrid, mass: float,
                             asymptote: float = 0.0,
                             e_ceiling: float | None = None,
                             n_lowest: int | None = None,
                             want_vectors: bool = True) -> SpectralDecomposition:
    """Dense symmetric eigensolution of T(sine) + diag(V_eff).

    e_ceiling (by value) or n_lowest (by index) restrict the returned
    eigenpairs; the full spectrum is still solved, this only bounds the
    memory of the vectors.
    """
    v_eff = np.asarray(v_eff, dtype=float)
    if v_eff.shape != (grid.n_points,):
        raise ValueError("V_eff must be sampled on the grid points")
    if not np.all(np.isfinite(v_eff)):
        raise ValueError("V_eff must be finite on the grid")
    h = kinetic_matrix_sine(grid, mass)
    idx = np.arange(grid.n_interior)
    h[idx, idx] += v_eff[1:-1]
    kw = {}
    if e_ceiling is not None:
        kw["subset_by_value"] = (-np.inf, e_ceiling)
    elif n_lowest is not None:
        kw["subset_by_index"] = (0, min(n_lowest, grid.n_interior) - 1)
    if want_vectors:
        energies, vec = scipy.linalg.eigh(h, **kw)
        vectors = np.zeros((vec.shape[1], grid.n_points))
        vectors[:, 1:-1] = vec.T / math.sqrt(grid.spacing)
    else:
        energies = scipy.linalg.eigh(h, eigvals_only=True, **kw)
        vectors = np.zeros((0, grid.n_points))
    n0 = int(np.searchsorted(energies, asymptote))
    return SpectralDecomposition(J=0, grid=grid, mass=mass, asymptote=asymptote,
                                 energies=np.asarray(energies), vectors=vectors,
                                 n0=n0)


def count_bound_states(decomp: SpectralDecomposition,
                       asymptote: float | None = None) -> int:
    """Number of eigenvalues below the dissociation asymptote."""
    asym = decomp.asymptote if asymptote is None else asymptote
    return int(np.count_nonzero(decomp.energies < asym))


def barrier_top(v_eff: np.ndarray, asymptote: float = 0.0):
    """(height, index) of the centrifugal barrier, or None without one.

    The barrier is the maximum of V_eff outside the potential minimum;
    it must exceed the asymptote to trap quasi-bound states.
    """
    i_min = int(np.argmin(v_eff))
    outer = v_eff[i_min:]
    i_top = int(np.argmax(outer)) + i_min
    if v_eff[i_top] <= asymptote + 1e-14 or i_top == i_min:
        return None
    return float(v_eff[i_top]), i_top


def tag_resonances(decomp: SpectralDecomposition, v_eff: np.ndarray,
                   trapped_fraction: float = 0.5,
                   resonances=None,
                   lifetime_cutoff_ns: float = 10.0) -> SpectralDecomposition:
    """Mark box states that represent shape resonances.

    A continuum state with asymptote < E < barrier top whose probability
    inside the barrier exceeds ``trapped_fraction`` is tagged as a
    resonance.  When a CAP resonance table is supplied, widths are
    copied from the nearest entry and only resonances shorter-lived than
    lifetime_cutoff_ns are tagged (long-lived ones are effectively bound
    on the pulse timescale but do not contribute to the filters).
    """
    top = barrier_top(v_eff, decomp.asymptote)
    if top is None or decomp.vectors.shape[0] == 0:
        return decomp
    v_top, i_top = top
    h = decomp.grid.spacing
    for n in range(decomp.n0, decomp.n_states):
        e = decomp.energies[n]
        if not decomp.asymptote < e < v_top:
            continue
        w_in = np.sum(np.abs(decomp.vectors[n, :i_top]) ** 2) * h
        if w_in < trapped_fraction:
            continue
        gamma = np.nan
        if resonances is not None:
            match = [r for r in resonances
                     if abs(r.e_res - e) < max(2.0 * r.gamma, 5e-6)]
            if match:
                gamma = min(match, key=lambda r: abs(r.e_res - e)).gamma
                if 1.0 / gamma > lifetime_cutoff_ns * units.NS_TO_AU:
                    continue
        decomp.tags[n] = TAG_RESONANCE
        decomp.widths[n] = gamma
    return decomp


@dataclass(frozen=True)
class ResonanceRow:
    J: int
    e_res: float            # hartree above the asymptote
    gamma: float            # hartree
    lifetime_ns: float

    @property
    def e_res_kelvin(self) -> float:
        return self.e_res * units.HARTREE_TO_KELVIN


def find_shape_resonances(v_eff: np.ndarray, grid: RadialGrid, mass: float,
                          cap: CapSpec, J: int = 0, asymptote: float = 0.0,
                          stability_fraction: float = 0.25,
                          gamma_floor: float = 1e-12,
                          trapped_min: float = 0.5) -> list:
    """Shape resonances of one partial wave from a CAP eigenproblem.

    The complex-symmetric matrix T + diag(V_eff - i eta W) is solved at
    eta/2, eta and 2 eta.  An eigenvalue E - i Gamma/2 of the middle run
    is accepted when (a) its eigenvector is trapped behind the
    centrifugal barrier (majority of |psi|^2 inside the barrier top,
    which rejects CAP-rotated box-continuum states), (b) its drift
    toward the nearest eigenvalue of both other runs stays below
    stability_fraction * Gamma with consistent widths, and (c) Re E lies
    between the asymptote and the barrier top with Gamma > gamma_floor.
    No barrier above the asymptote yields an empty list (not an error).
    """
    top = barrier_top(v_eff, asymptote)
    if top is None:
        return []
    v_top, i_top = top

    h0 = kinetic_matrix_sine(grid, mass).astype(complex)
    idx = np.arange(grid.n_interior)
    h0[idx, idx] += v_eff[1:-1]
    w = cap_shape(grid, cap.r_start(grid), cap.order)[1:-1]

    def caps_eigs(eta, vectors=False):
        hm = h0.copy()
        hm[idx, idx] -= 1j * eta * w
        if not vectors:
            vals = scipy.linalg.eig(hm, right=False)
            sel = (vals.imag < 0.0) & (vals.real > asymptote) & (vals.real < v_top)
            return vals[sel], None
        vals, vecs = scipy.linalg.eig(hm, right=True)
        sel = (vals.imag < 0.0) & (vals.real > asymptote) & (vals.real < v_top)
        return vals[sel], vecs[:, sel]

    e_mid, vecs = caps_eigs(cap.strength, vectors=True)
    e_others = [caps_eigs(0.5 * cap.strength)[0], caps_eigs(2.0 * cap.strength)[0]]
    trapped = np.array([
        np.sum(np.abs(vecs[:i_top, i]) ** 2) / np.sum(np.abs(vecs[:, i]) ** 2)
        for i in range(vecs.shape[1])]) if vecs.shape[1] else np.zeros(0)

    rows = []
    for i, v in enumerate(e_mid):
        gamma = -2.0 * v.imag
        if gamma <= gamma_floor or trapped[i] < trapped_min:
            continue
        stable = True
        for other in e_others:
            if len(other) == 0:
                stable = False
                break
            partner = other[np.argmin(np.abs(other - v))]
            g_other = -2.0 * partner.imag
            if (abs(partner - v) > stability_fraction * gamma
                    or abs(g_other - gamma) > gamma):
                stable = False
                break
        if not stable:
            continue
        if any(abs(r.e_res - v.real) < 0.5 * max(gamma, r.gamma) for r in rows):
            continue
        rows.append(ResonanceRow(J=J, e_res=float(v.real), gamma=float(gamma),
                                 lifetime_ns=float(1.0 / gamma / units.NS_TO_AU)))
    rows.sort(key=lambda r: r.e_res)
    return rows


def resonance_table_csv(rows, path):
    """Write resonance rows as CSV: J, E_hartree, E_kelvin, gamma, lifetime."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# J,E_hartree,E_kelvin,gamma_hartree,lifetime_ns\n")
        for r in rows:
            fh.write("%d,%.17g,%.17g,%.17g,%.17g\n"
                     % (r.J, r.e_res, r.e_res_kelvin, r.gamma, r.lifetime_ns))
