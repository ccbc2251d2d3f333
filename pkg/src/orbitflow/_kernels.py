"""Compiled inner loops for triad sums and Jacobi rotations.

All kernels are serial and release the GIL, so callers may run them from a thread pool.
Loop order is fixed, which keeps floating-point results bit-stable.
"""

import numba as nb
import numpy as np


# form 0: w = q (u_p . u_q), the gradient form; form 1: w = (q . u_p) u_q, advection.


@nb.njit(cache=True, nogil=True, inline="always")
def _triad_vector(u, modes, p, q, form):
    if form == 0:
        d = u[p, 0] * u[q, 0] + u[p, 1] * u[q, 1] + u[p, 2] * u[q, 2]
        return modes[q, 0] * d, modes[q, 1] * d, modes[q, 2] * d
    d = modes[q, 0] * u[p, 0] + modes[q, 1] * u[p, 1] + modes[q, 2] * u[p, 2]
    return d * u[q, 0], d * u[q, 1], d * u[q, 2]


@nb.njit(cache=True, nogil=True)
def transfer_matrix(u, modes, k2, offsets, p_idx, q_idx, mode_orbit, orbit_size, n_orb, form):
    S = np.zeros((n_orb, n_orb))
    for i in range(modes.shape[0]):
        k0, k1, k2_ = modes[i, 0], modes[i, 1], modes[i, 2]
        c0, c1, c2 = np.conj(u[i, 0]), np.conj(u[i, 1]), np.conj(u[i, 2])
        kdotc = (k0 * c0 + k1 * c1 + k2_ * c2) / k2[i]
        a = mode_orbit[i]
        for t in range(offsets[i], offsets[i + 1]):
            p = p_idx[t]
            w0, w1, w2 = _triad_vector(u, modes, p, q_idx[t], form)
            # conj(u_k) . P(k) w
            cw = c0 * w0 + c1 * w1 + c2 * w2 - kdotc * (k0 * w0 + k1 * w1 + k2_ * w2)
            # Re(-i z) = Im(z)
            S[a, mode_orbit[p]] += k2[i] * cw.imag
    for a in range(n_orb):
        for b in range(n_orb):
            S[a, b] /= orbit_size[a]
    return S


@nb.njit(cache=True, nogil=True)
def nonlinear_term(u, modes, k2, offsets, p_idx, q_idx, form):
    out = np.zeros((modes.shape[0], 3), dtype=np.complex128)
    for i in range(modes.shape[0]):
        s0 = 0j
        s1 = 0j
        s2 = 0j
        for t in range(offsets[i], offsets[i + 1]):
            w0, w1, w2 = _triad_vector(u, modes, p_idx[t], q_idx[t], form)
            s0 += w0
            s1 += w1
            s2 += w2
        kw = (modes[i, 0] * s0 + modes[i, 1] * s1 + modes[i, 2] * s2) / k2[i]
        out[i, 0] = -1j * (s0 - modes[i, 0] * kw)
        out[i, 1] = -1j * (s1 - modes[i, 1] * kw)
        out[i, 2] = -1j * (s2 - modes[i, 2] * kw)
    return out


@nb.njit(cache=True, nogil=True)
def jacobi_eigenvalues(A, tol, max_sweeps):
    """Cyclic Jacobi; stops when the off-diagonal Frobenius norm <= tol * ||A||_F."""
    a = A.copy()
    n = a.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(n):
            total += a[i, j] * a[i, j]
    target = tol * np.sqrt(total)
    sweeps = 0
    for sweep in range(max_sweeps):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += 2.0 * a[i, j] * a[i, j]
        if np.sqrt(off) <= target:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for r in range(n):
                    arp = a[r, p]
                    arq = a[r, q]
                    a[r, p] = c * arp - s * arq
                    a[r, q] = s * arp + c * arq
                for r in range(n):
                    apr = a[p, r]
                    aqr = a[q, r]
                    a[p, r] = c * apr - s * aqr
                    a[q, r] = s * apr + c * aqr
    eig = np.empty(n)
    for i in range(n):
        eig[i] = a[i, i]
    return eig, sweeps
