# _kernels_numba.py
#
# numba-compiled hot kernels (see _kernels_numpy for the reference
# semantics and argument documentation).  nogil so (k, J) jobs can run
# on a thread pool.

import numba
import numpy as np

_sig_pa = numba.void(
    numba.complex128[:, ::1], numba.complex128[:, ::1],
    numba.float64[:, ::1], numba.float64[:, ::1],
    numba.float64[::1], numba.float64[:, ::1],
    numba.float64[::1], numba.float64[::1], numba.float64[::1],
    numba.complex128, numba.float64, numba.complex128, numba.complex128,
)


@numba.njit(_sig_pa, cache=True, nogil=True)
def pa_couple(out, psi, vdiag, alpha, m2, mu, v12, a12, cap, e2, i2, f, eta):
    n = psi.shape[1]
    fc = np.conj(f)
    for j in range(n):
        chi = e2 * m2[j]
        w12 = v12[j] + i2 * a12[j]
        capj = eta * cap[j]
        p0 = psi[0, j]
        p1 = psi[1, j]
        p2 = psi[2, j]
        p3 = psi[3, j]
        p4 = psi[4, j]
        out[0, j] += (vdiag[0, j] + i2 * alpha[0, j] + capj) * p0 + np.conj(chi) * p1
        out[1, j] += (chi * p0
                      + (vdiag[1, j] + i2 * alpha[1, j] + capj) * p1
                      + fc * (mu[0, j] * p2 + mu[1, j] * p3 + mu[2, j] * p4))
        out[2, j] += (f * mu[0, j] * p1
                      + (vdiag[2, j] + i2 * alpha[2, j] + capj) * p2 + w12 * p3)
        out[3, j] += (f * mu[1, j] * p1
                      + w12 * p2 + (vdiag[3, j] + i2 * alpha[3, j] + capj) * p3)
        out[4, j] += (f * mu[2, j] * p1
                      + (vdiag[4, j] + i2 * alpha[4, j] + capj) * p4)


@numba.njit(numba.void(numba.complex128[::1], numba.complex128[::1],
                       numba.complex128[::1]),
            cache=True, nogil=True)
def diag_accum(out, psi, v):
    for j in range(out.size):
        out[j] += v[j] * psi[j]


@numba.njit(numba.void(numba.complex128[::1], numba.complex128[::1],
                       numba.complex128[::1], numba.complex128),
            cache=True, nogil=True)
def cheb_combine(hphi, phi_prev, acc, c):
    for j in range(hphi.size):
        v = 2.0 * hphi[j] - phi_prev[j]
        phi_prev[j] = v
        acc[j] += c * v
