# validation.py
#
# Independent brute-force oracles for the test suite.  These run only at
# test scale (N_R <= 64 interior points, <= 5 channels) and deliberately
# avoid the production code paths they validate:
#
#   * dense kinetic blocks are built by an explicit sine-basis sandwich,
#     not the closed-form DVR matrix of grid.py;
#   * time propagation is a time-ordered product of dense matrix
#     exponentials, not a Chebyshev recurrence;
#   * thermal traces are exact eigen-sums;
#   * resonances come from box-size stabilization, not a CAP.
#
# Determinism is prioritized over speed throughout.

from __future__ import annotations

import numpy as np
import scipy.integrate
import scipy.linalg

from .grid import RadialGrid
from .hamiltonian import GroundHamiltonian, PAHamiltonian


# -- dense matrices and time-ordered propagation ------------------------------

def dense_kinetic_sandwich(grid: RadialGrid, mass: float) -> np.ndarray:
    """Interior kinetic matrix from the explicit sine-basis sum."""
    n = grid.n_interior
    modes = np.arange(1, n + 1)
    s = np.sin(np.pi * np.outer(modes, np.arange(1, n + 1)) / (n + 1))
    evals = (modes * np.pi / grid.box_length) ** 2 / (2.0 * mass)
    return (2.0 / (n + 1)) * (s * evals[:, None]).T @ s


def dense_hamiltonian(ham, t: float = 0.0) -> np.ndarray:
    """Explicit (n_ch * n_int)^2 matrix of a Hamiltonian applier at time t.

    Interior points only (hard-wall convention).  Uses the applier's
    stored coefficient arrays but none of its application code.
    """
    tmat = dense_kinetic_sandwich(ham.grid, ham.mass)
    n = ham.grid.n_interior
    sl = slice(1, -1)
    if isinstance(ham, GroundHamiltonian):
        return tmat + np.diag(ham.v_eff[sl])
    if not isinstance(ham, PAHamiltonian):
        raise TypeError(f"unsupported Hamiltonian type {type(ham)!r}")

    e2, i2, f = ham.scalars(t)
    full = np.zeros((5 * n, 5 * n), dtype=complex)
    blocks = lambda c: slice(c * n, (c + 1) * n)  # noqa: E731
    cap = -1j * ham.cap_eta * ham.cap_w[sl]
    for c in range(5):
        diag = ham.vdiag[c, sl] + i2 * ham.alpha[c, sl] + cap
        full[blocks(c), blocks(c)] = tmat + np.diag(diag)
    chi = e2 * ham.m2[sl]
    full[blocks(0), blocks(1)] += np.diag(np.conj(chi))
    full[blocks(1), blocks(0)] += np.diag(chi)
    for i in range(3):
        coup = ham.mu[i, sl]
        full[blocks(1), blocks(2 + i)] += np.diag(np.conj(f) * coup)
        full[blocks(2 + i), blocks(1)] += np.diag(f * coup)
    w12 = ham.v12[sl] + i2 * ham.a12[sl]
    full[blocks(2), blocks(3)] += np.diag(w12)
    full[blocks(3), blocks(2)] += np.diag(w12)
    return full


def dense_time_ordered_propagator(h_of_t, t_start: float, t_end: float,
                                  dt_fine: float) -> np.ndarray:
    """Time-ordered product of midpoint matrix exponentials.

    h_of_t(t) returns the dense Hamiltonian matrix; the result is
    U = prod_i expm(-i H(t_i + dt/2) dt) applied right-to-left.
    """
    n_steps = max(1, int(np.ceil((t_end - t_start) / dt_fine)))
    dt = (t_end - t_start) / n_steps
    u = None
    for i in range(n_steps):
        h = np.asarray(h_of_t(t_start + (i + 0.5) * dt), dtype=complex)
        step = scipy.linalg.expm(-1j * h * dt)
        u = step if u is None else step @ u
    return u


def propagate_dense(ham, amps0: np.ndarray, t_start: float, t_end: float,
                    dt_fine: float) -> np.ndarray:
    """Dense-oracle propagation of interior amplitudes (shape (n_ch, n))."""
    u = dense_time_ordered_propagator(lambda t: dense_hamiltonian(ham, t),
                                      t_start, t_end, dt_fine)
    vec = amps0[:, 1:-1].reshape(-1)
    out = u @ vec
    full = np.zeros_like(amps0)
    full[:, 1:-1] = out.reshape(amps0.shape[0], -1)
    return full


# -- exact thermal references --------------------------------------------------

def exact_thermal_trace(energies: np.ndarray, beta: float,
                        diag_values: np.ndarray) -> float:
    """sum_n e^{-beta E_n} a_n / sum_n e^{-beta E_n}."""
    w = np.exp(-beta * (energies - energies.min()))
    return float(np.sum(w * diag_values) / np.sum(w))


def exact_thermal_density(energies: np.ndarray, vectors: np.ndarray,
                          beta: float) -> np.ndarray:
    """Unnormalized thermal density sum_n e^{-beta E_n} |phi_n(R)|^2."""
    w = np.exp(-beta * energies)
    return (w[:, None] * np.abs(vectors) ** 2).sum(axis=0)


# -- quadrature oracle for the classical partial-wave partition function -------

def classical_zj_quadrature(j: float, beta: float, mass: float,
                            r_max: float) -> float:
    """int_0^{R_max} exp(-beta J^2 / (2 m R^2)) dR by adaptive quadrature."""
    if j == 0:
        return r_max
    a = beta * j * j / (2.0 * mass)

    val, err = scipy.integrate.quad(lambda r: np.exp(-a / (r * r)),
                                    0.0, r_max, limit=200,
                                    epsabs=0.0, epsrel=1e-12)
    return float(val)


# -- analytic spectra -----------------------------------------------------------

def box_levels(n_levels: int, mass: float, length: float) -> np.ndarray:
    """Particle-in-a-box energies n^2 pi^2 / (2 m L^2), n = 1..n_levels."""
    n = np.arange(1, n_levels + 1)
    return (n * np.pi / length) ** 2 / (2.0 * mass)


def morse_levels(d_e: float, a: float, mass: float,
                 asymptote: float = 0.0) -> np.ndarray:
    """Bound Morse spectrum E_n = -D_e + w0(n+1/2) - w0^2/(4 D_e) (n+1/2)^2."""
    lam = np.sqrt(2.0 * mass * d_e) / a
    n_bound = int(np.floor(lam - 0.5)) + 1
    n = np.arange(n_bound) + 0.5
    w0 = a * np.sqrt(2.0 * d_e / mass)
    return asymptote - d_e + w0 * n - (w0**2 / (4.0 * d_e)) * n**2


def free_gaussian_width(sigma0: float, mass: float, t: float) -> float:
    """Coordinate-space width sigma(t) of a free Gaussian packet.

    sigma(t)^2 = sigma0^2 (1 + (t / (2 m sigma0^2))^2) for a packet whose
    probability density has initial standard deviation sigma0.
    """
    return sigma0 * np.sqrt(1.0 + (t / (2.0 * mass * sigma0**2)) ** 2)


# -- stabilization-diagram resonance finder -------------------------------------

def stabilization_resonances(potential_fn, mass: float, r_min: float,
                             box_sizes, n_points: int,
                             e_ceiling: float,
                             flatness: float = 0.15,
                             min_hits: int = 3):
    """Resonance positions from eigenvalue plateaus under box-size variation.

    For each box size L the interior spectrum is computed densely; a
    genuine box-continuum level drifts like dE/dL ~ -2E/L while a
    resonance stays put.  Eigenvalues in (0, e_ceiling) whose drift is
    below ``flatness`` times the free-level drift are collected and
    clustered; clusters seen in at least ``min_hits`` box pairs become
    resonance estimates (median position).
    """
    spectra = []
    for length in box_sizes:
        g = RadialGrid(r_min, r_min + length, n_points)
        tmat = dense_kinetic_sandwich(g, mass)
        v = potential_fn(g.r[1:-1])
        evals = scipy.linalg.eigh(tmat + np.diag(v), eigvals_only=True)
        spectra.append((length, evals))

    candidates = []
    for (l1, e1), (l2, e2) in zip(spectra[:-1], spectra[1:]):
        m = min(len(e1), len(e2))
        dl = l2 - l1
        for i in range(m):
            e_mid = 0.5 * (e1[i] + e2[i])
            if not (0.0 < e_mid < e_ceiling):
                continue
            drift = abs(e2[i] - e1[i]) / dl
            free_drift = 2.0 * e_mid / (0.5 * (l1 + l2))
            if drift < flatness * free_drift:
                candidates.append(e_mid)
    if not candidates:
        return []
    candidates.sort()
    clusters = [[candidates[0]]]
    for e in candidates[1:]:
        if e - clusters[-1][-1] < 0.02 * e_ceiling:
            clusters[-1].append(e)
        else:
            clusters.append([e])
    return [float(np.median(c)) for c in clusters if len(c) >= min_hits]


# -- standard-constants oracle ---------------------------------------------------

def codata_reference():
    """Conversion factors recomputed from scipy.constants (CODATA source).

    Used to pin the units table: hartree<->cm^-1, k_B in hartree/K, the
    atomic unit of intensity in W/cm^2, and fs per atomic time unit.
    """
    import scipy.constants as sc
    hartree_j = sc.value("Hartree energy")
    a0 = sc.value("Bohr radius")
    e_field_au = hartree_j / (sc.e * a0)
    return {
        "hartree_to_cm1": sc.value("hartree-inverse meter relationship") / 100.0,
        "kb_au": sc.k / hartree_j,
        "intensity_au_w_cm2": 0.5 * sc.epsilon_0 * sc.c * e_field_au**2 / 1.0e4,
        "fs_to_au": 1.0e-15 / sc.value("atomic unit of time"),
        "bohr_to_angstrom": a0 * 1.0e10,
        "hartree_to_ev": sc.value("Hartree energy in eV"),
        "amu_to_au": sc.value("atomic mass constant") / sc.m_e,
    }
