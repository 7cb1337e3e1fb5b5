# propagator.py
#
# Chebyshev polynomial expansion of the real-time evolution operator
# exp(-i H dt) and of the Boltzmann operator exp(-(beta/2) H).
#
# The Hamiltonian is mapped onto H_s with spectrum inside [-1, 1] using
# bounds (E_min, E_max) that are guaranteed to bracket the true
# spectrum; the expansion is
#
#   exp(-i H dt)      = e^{-i Ebar dt} sum_n (2-d_n0)(-i)^n J_n(a) T_n(H_s)
#   exp(-(b/2) H)     = e^{-(b/2) E_min} sum_n (2-d_n0)(-1)^n
#                          [e^{-g} I_n(g)] T_n(H_s)
#
# with a = dt (E_max-E_min)/2, g = (b/2)(E_max-E_min)/2, Ebar the band
# center, J_n Bessel and e^{-g} I_n(g) the scaled modified Bessel
# functions.  Series are truncated once the coefficients fall below the
# plan tolerance; the first truncated coefficient is checked against it.
#
# Time-dependent propagation freezes the Hamiltonian at each step
# midpoint (second-order accurate in dt).

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.special

from .backend import kernels
from .grid import ChannelState, apply_kinetic_sine, norm
from .hamiltonian import GroundHamiltonian, PAHamiltonian


class SpectralBoundsError(RuntimeError):
    """Chebyshev recurrence blew up: spectral bounds do not bracket H."""


class NormDriftError(RuntimeError):
    """Norm drift beyond the declared threshold without a CAP."""


@dataclass(frozen=True)
class PropagationPlan:
    """Scaling and truncation data for one Chebyshev expansion.

    Either dt (real time) or half_beta (imaginary time) is set.  order
    is the number of retained polynomial terms; the first truncated
    coefficient is below tolerance.
    """

    e_min: float
    e_max: float
    order: int
    tolerance: float
    dt: float | None = None
    half_beta: float | None = None
    coeffs: np.ndarray = None
    prefactor: complex = 1.0

    def __post_init__(self):
        if self.e_max <= self.e_min:
            raise ValueError("need e_max > e_min")


def _truncate(coeff_mag, tol, nmin=2):
    """Index after the last coefficient with magnitude >= tol."""
    keep = np.nonzero(coeff_mag >= tol)[0]
    if keep.size == 0:
        return nmin
    return max(int(keep[-1]) + 2, nmin)  # keep one sub-tolerance term as guard


def real_time_plan(e_min: float, e_max: float, dt: float,
                   tolerance: float = 1e-12) -> PropagationPlan:
    """Expansion of exp(-i H dt) for a Hamiltonian inside [e_min, e_max]."""
    half_range = 0.5 * (e_max - e_min)
    ebar = 0.5 * (e_max + e_min)
    a = dt * half_range
    if a < 0:
        raise ValueError("dt must be nonnegative")
    nmax = int(a + 30 + 15 * a ** (1.0 / 3.0)) if a > 0 else 4
    n = np.arange(nmax + 1)
    jn = scipy.special.jv(n, a)
    order = _truncate(np.abs(jn), tolerance)
    if np.abs(jn[order - 1:]).max() >= tolerance and order >= nmax:
        raise ValueError("Chebyshev order did not converge; enlarge nmax")
    coeffs = 2.0 * (-1j) ** n[:order] * jn[:order]
    coeffs[0] *= 0.5
    return PropagationPlan(e_min=e_min, e_max=e_max, order=order,
                           tolerance=tolerance, dt=dt, coeffs=coeffs,
                           prefactor=np.exp(-1j * ebar * dt))


def imag_time_plan(e_min: float, e_max: float, half_beta: float,
                   tolerance: float = 1e-12) -> PropagationPlan:
    """Expansion of exp(-(beta/2) H); result carries e^{-(beta/2) e_min}."""
    if half_beta < 0:
        raise ValueError("half_beta must be nonnegative")
    g = half_beta * 0.5 * (e_max - e_min)
    nmax = int(g + 30 + 15 * g ** (1.0 / 3.0)) if g > 0 else 4
    n = np.arange(nmax + 1)
    iv = scipy.special.ive(n, g)          # e^{-g} I_n(g), bounded by 1
    order = _truncate(iv, tolerance)
    coeffs = (2.0 * (-1.0) ** n[:order] * iv[:order]).astype(complex)
    coeffs[0] *= 0.5
    return PropagationPlan(e_min=e_min, e_max=e_max, order=order,
                           tolerance=tolerance, half_beta=half_beta,
                           coeffs=coeffs,
                           prefactor=complex(np.exp(-half_beta * e_min)))


def estimate_spectral_range(ham, padding: float = 0.05):
    """Bounds guaranteed to bracket the spectrum of a Hamiltonian applier.

    E_max: max grid kinetic energy + largest diagonal + coupling row-sum
    bound; E_min: smallest diagonal - coupling row-sum bound; the band is
    then padded by ``padding`` of its width on both sides.
    """
    tmax = ham.grid.max_kinetic_energy(ham.mass)
    if isinstance(ham, PAHamiltonian):
        lo, hi = ham.diagonal_bounds()
        c = ham.coupling_bound()
        e_min, e_max = lo - c, tmax + hi + c
    elif isinstance(ham, GroundHamiltonian):
        v = ham.v_eff.real
        e_min, e_max = float(v.min()), tmax + float(v.max())
    else:
        raise TypeError(f"unsupported Hamiltonian type {type(ham)!r}")
    pad = padding * (e_max - e_min)
    return e_min - pad, e_max + pad


class _ScaledApplier:
    """Applies H_s = (H - Ebar) / half_range with pre-scaled arrays."""

    def __init__(self, ham, e_min, e_max):
        self.grid = ham.grid
        self.mass = ham.mass
        s = 2.0 / (e_max - e_min)
        ebar = 0.5 * (e_max + e_min)
        self.kscale = s
        self.ham = ham
        if isinstance(ham, PAHamiltonian):
            self.n_channels = 5
            self.vdiag = np.ascontiguousarray((ham.vdiag - ebar) * s)
            self.alpha = np.ascontiguousarray(ham.alpha * s)
            self.m2 = np.ascontiguousarray(ham.m2 * s)
            self.mu = np.ascontiguousarray(ham.mu * s)
            self.v12 = np.ascontiguousarray(ham.v12 * s)
            self.a12 = np.ascontiguousarray(ham.a12 * s)
            self.cap_w = np.ascontiguousarray(ham.cap_w)
            self.eta = -1j * ham.cap_eta * s
            self._apply = self._apply_pa
        elif isinstance(ham, GroundHamiltonian):
            self.n_channels = 1
            self.v = np.ascontiguousarray((ham.v_eff - ebar) * s)
            self._apply = self._apply_ground
        else:
            raise TypeError(f"unsupported Hamiltonian type {type(ham)!r}")

    def _apply_pa(self, out, amps, t):
        apply_kinetic_sine(amps, self.grid, self.mass, out=out, scale=self.kscale)
        e2, i2, f = self.ham.scalars(t)
        kernels.pa_couple(out, amps, self.vdiag, self.alpha, self.m2, self.mu,
                          self.v12, self.a12, self.cap_w,
                          complex(e2), float(i2), complex(f), self.eta)
        return out

    def _apply_ground(self, out, amps, t):
        apply_kinetic_sine(amps, self.grid, self.mass, out=out, scale=self.kscale)
        for c in range(amps.shape[0]):
            kernels.diag_accum(out[c], amps[c], self.v)
        return out

    def apply(self, out, amps, t):
        return self._apply(out, amps, t)


def _cheb_sum(applier: _ScaledApplier, amps: np.ndarray, plan: PropagationPlan,
              t: float, work=None) -> np.ndarray:
    """sum_n c_n T_n(H_s) |amps>; guards against recurrence blow-up.

    For a Hamiltonian inside the plan bounds every Chebyshev vector obeys
    |T_n(H_s) psi| <= |psi| (up to a small CAP allowance), so growth of
    the recurrence signals violated bounds.
    """
    coeffs = plan.coeffs
    if work is None:
        work = [np.empty_like(amps) for _ in range(3)]
    phi_prev, phi_cur, hphi = work
    phi_prev[:] = amps
    acc = coeffs[0] * phi_prev
    if len(coeffs) == 1:
        return acc
    norm0 = np.linalg.norm(amps)
    guard = max(16.0 * norm0**2, 1e-300)

    def check(vec, term):
        sq = np.vdot(vec, vec).real
        if not np.isfinite(sq) or sq > guard:
            raise SpectralBoundsError(
                "Chebyshev recurrence grew beyond the unit band: spectral "
                "bounds violated (order %d, term %d)" % (len(coeffs), term))

    applier.apply(phi_cur, phi_prev, t)
    check(phi_cur.reshape(-1), 1)
    acc += coeffs[1] * phi_cur
    fp, fc, fh, fa = (phi_prev.reshape(-1), phi_cur.reshape(-1),
                      hphi.reshape(-1), acc.reshape(-1))
    for nn in range(2, len(coeffs)):
        applier.apply(hphi.reshape(amps.shape), phi_cur.reshape(amps.shape), t)
        kernels.cheb_combine(fh, fp, fa, complex(coeffs[nn]))
        fp, fc = fc, fp
        phi_prev, phi_cur = phi_cur, phi_prev
        if nn % 16 == 0:
            check(fc, nn)
    check(fc, len(coeffs) - 1)
    return acc


def chebyshev_real_step(state: ChannelState, ham, dt: float,
                        plan: PropagationPlan | None = None,
                        t: float = 0.0) -> ChannelState:
    """exp(-i H dt)|psi> with H frozen at time t.

    Norm is preserved to the plan tolerance for Hermitian H.
    """
    if plan is None:
        e_min, e_max = estimate_spectral_range(ham)
        plan = real_time_plan(e_min, e_max, dt)
    applier = _ScaledApplier(ham, plan.e_min, plan.e_max)
    acc = _cheb_sum(applier, state.amplitudes, plan, t)
    acc *= plan.prefactor
    return ChannelState(state.grid, state.channel_labels, acc, state.J)


def chebyshev_imag(state: ChannelState, ham, half_beta: float,
                   plan: PropagationPlan | None = None) -> ChannelState:
    """exp(-(beta/2) H)|psi>, unnormalized."""
    if plan is None:
        e_min, e_max = estimate_spectral_range(ham)
        plan = imag_time_plan(e_min, e_max, half_beta)
    applier = _ScaledApplier(ham, plan.e_min, plan.e_max)
    acc = _cheb_sum(applier, state.amplitudes, plan, t=0.0)
    acc *= plan.prefactor
    return ChannelState(state.grid, state.channel_labels, acc, state.J)


@dataclass
class PropagationReport:
    n_steps: int
    order: int
    norm_drift: float           # |final norm - initial norm| (CAP off)
    final_norm: float


def propagate_pulse(state: ChannelState, ham: PAHamiltonian,
                    t_start: float, t_end: float, dt: float,
                    plan: PropagationPlan | None = None,
                    observer=None, norm_tol: float = 1e-5,
                    tolerance: float = 1e-12):
    """Drive a state through the pulse window with midpoint-frozen steps.

    Returns (final_state, PropagationReport).  observer(t, amplitudes)
    is called after every step when given.  Without a CAP, a cumulative
    norm drift beyond norm_tol aborts with NormDriftError.
    """
    if t_end <= t_start:
        raise ValueError("need t_end > t_start")
    n_steps = max(1, int(np.ceil((t_end - t_start) / dt)))
    dt_step = (t_end - t_start) / n_steps
    if plan is None:
        e_min, e_max = estimate_spectral_range(ham)
        plan = real_time_plan(e_min, e_max, dt_step, tolerance=tolerance)
    applier = _ScaledApplier(ham, plan.e_min, plan.e_max)

    amps = state.amplitudes.copy()
    work = [np.empty_like(amps) for _ in range(3)]
    has_cap = ham.cap_eta > 0.0
    norm0 = np.linalg.norm(amps) * np.sqrt(state.grid.spacing)
    for i in range(n_steps):
        t_mid = t_start + (i + 0.5) * dt_step
        acc = _cheb_sum(applier, amps, plan, t_mid, work=work)
        acc *= plan.prefactor
        amps[:] = acc
        if observer is not None:
            observer(t_start + (i + 1) * dt_step, amps)
    norm1 = np.linalg.norm(amps) * np.sqrt(state.grid.spacing)
    drift = abs(norm1 - norm0)
    if not has_cap and drift > norm_tol * max(norm0, 1e-300):
        raise NormDriftError(
            f"norm drifted by {drift:.3e} over {n_steps} steps (tol {norm_tol:.1e})")
    final = ChannelState(state.grid, state.channel_labels, amps, state.J)
    return final, PropagationReport(n_steps=n_steps, order=plan.order,
                                    norm_drift=drift, final_norm=norm1)
