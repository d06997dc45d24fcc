# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: position-space walk step, wrapped phase increments,
two-mode Loschmidt tables. Semantics mirror _kernels_py exactly."""
import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, cos, exp, sin

cnp.import_array()


def walk_step(psi, double a_entry, double a_mid1, double a_mid2,
              double a_exit, double keep_amp, double gamma):
    """One split-step walk step; see the python twin for the layout contract."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] inp = np.ascontiguousarray(psi, dtype=complex)
    cdef Py_ssize_t n = inp.shape[1]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] mid = np.zeros((2, n + 2), dtype=complex)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] out = np.zeros((2, n + 4), dtype=complex)
    cdef double c, s, m0, m1
    cdef double complex h, v
    cdef Py_ssize_t j

    # entry coin, then first shift: H left into columns [0, n), V right into [2, n+2)
    c = cos(a_entry); s = sin(a_entry)
    for j in range(n):
        h = inp[0, j]; v = inp[1, j]
        mid[0, j] = c * h - s * v
        mid[1, j + 2] = s * h + c * v

    # middle coin, partial measurement, middle coin (in place on mid)
    c = cos(a_mid1); s = sin(a_mid1)
    m0 = 0.5 * (1.0 + keep_amp); m1 = 0.5 * (1.0 - keep_amp)
    for j in range(n + 2):
        h = mid[0, j]; v = mid[1, j]
        h = c * h - s * v; v = s * mid[0, j] + c * mid[1, j]
        mid[0, j] = m0 * h + m1 * v
        mid[1, j] = m1 * h + m0 * v
    c = cos(a_mid2); s = sin(a_mid2)
    for j in range(n + 2):
        h = mid[0, j]; v = mid[1, j]
        mid[0, j] = c * h - s * v
        mid[1, j] = s * h + c * v

    # second shift, exit coin, per-step rescale
    c = cos(a_exit); s = sin(a_exit)
    for j in range(n + 2):
        out[0, j] = mid[0, j]
        out[1, j + 2] = mid[1, j]
    for j in range(n + 4):
        h = out[0, j]; v = out[1, j]
        out[0, j] = gamma * (c * h - s * v)
        out[1, j] = gamma * (s * h + c * v)
    return out


def phase_increments(z):
    """Wrapped phase increments arg(z[i+1] * conj(z[i])), each in (-pi, pi]."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] zz = np.ascontiguousarray(z, dtype=complex)
    cdef Py_ssize_t n = zz.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] inc = np.empty(max(n - 1, 0), dtype=float)
    cdef double ar, ai, br, bi
    cdef Py_ssize_t i
    for i in range(n - 1):
        ar = zz[i].real; ai = zz[i].imag
        br = zz[i + 1].real; bi = zz[i + 1].imag
        # z[i+1] * conj(z[i])
        inc[i] = atan2(bi * ar - br * ai, br * ar + bi * ai)
    return inc


def two_mode_table(a, b, energy, times):
    """G[j, i] = a[j] e^{i E[j] t[i]} + b[j] e^{-i E[j] t[i]} (complex E allowed)."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] aa = np.ascontiguousarray(a, dtype=complex)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] bb = np.ascontiguousarray(b, dtype=complex)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] ee = np.ascontiguousarray(energy, dtype=complex)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] tt = np.ascontiguousarray(times, dtype=float)
    cdef Py_ssize_t nk = aa.shape[0], nt = tt.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] g = np.empty((nk, nt), dtype=complex)
    cdef Py_ssize_t j, i
    cdef double er, ei, t, down, grow, ph
    cdef double complex up, dn
    for j in range(nk):
        er = ee[j].real; ei = ee[j].imag
        for i in range(nt):
            t = tt[i]
            # e^{iEt} = e^{-Im(E) t} (cos(Re(E) t) + i sin(Re(E) t))
            grow = exp(-ei * t); down = exp(ei * t); ph = er * t
            up = grow * cos(ph) + 1j * (grow * sin(ph))
            dn = down * cos(ph) - 1j * (down * sin(ph))
            g[j, i] = aa[j] * up + bb[j] * dn
    return g
