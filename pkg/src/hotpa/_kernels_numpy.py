# _kernels_numpy.py
#
# Pure-numpy reference implementations of the hot kernels.  Same
# signatures as _kernels_numba; selected via HOTPA_NUMBA=0 (see backend).

import numpy as np


def pa_couple(out, psi, vdiag, alpha, m2, mu, v12, a12, cap, e2, i2, f, eta):
    """Add the potential/coupling part of the five-channel pump Hamiltonian.

    out, psi        (5, n) complex; out is accumulated into
    vdiag, alpha    (5, n) real: diagonal potentials and Stark traces
    m2              (n,) real: contracted two-photon moment profile
    mu              (3, n) real: one-photon dipole profiles
    v12, a12        (n,) real: diabatic coupling and its Stark trace
    cap             (n,) real: absorbing-potential shape W(R) >= 0
    e2              complex: (1/4) E(t)^2
    i2              real:   -(1/4)|E(t)|^2
    f               complex: E(t)
    eta             complex: -i eta_cap (0 when the CAP is off)
    """
    chi = e2 * m2
    w12 = v12 + i2 * a12
    d = vdiag + i2 * alpha
    fc = np.conj(f)
    out[0] += d[0] * psi[0] + np.conj(chi) * psi[1] + eta * (cap * psi[0])
    out[1] += (chi * psi[0] + d[1] * psi[1]
               + fc * (mu[0] * psi[2] + mu[1] * psi[3] + mu[2] * psi[4])
               + eta * (cap * psi[1]))
    out[2] += f * (mu[0] * psi[1]) + d[2] * psi[2] + w12 * psi[3] + eta * (cap * psi[2])
    out[3] += f * (mu[1] * psi[1]) + w12 * psi[2] + d[3] * psi[3] + eta * (cap * psi[3])
    out[4] += f * (mu[2] * psi[1]) + d[4] * psi[4] + eta * (cap * psi[4])


def diag_accum(out, psi, v):
    """out += v * psi for flattened complex arrays (v may be complex)."""
    out += v * psi


def cheb_combine(hphi, phi_prev, acc, c):
    """Chebyshev three-term step on flattened arrays.

    phi_next = 2 * hphi - phi_prev is stored into phi_prev, and
    acc += c * phi_next.
    """
    np.multiply(hphi, 2.0, out=hphi)
    np.subtract(hphi, phi_prev, out=phi_prev)
    # phi_prev now holds phi_next; hphi holds 2*H*phi (scratch)
    acc += c * phi_prev
