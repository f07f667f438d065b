# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled trial kernel. Mirrors crac._kernels_py operation for operation."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, cos, sin

cnp.import_array()

cdef double INV_SQRT2 = 0.70710678118654752440


cdef inline double abs2(double complex z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline int measure_probe(double complex* psi, double complex ph, double r,
                              double complex* out) nogil:
    cdef double complex p0 = (psi[0] + ph * psi[1]) * INV_SQRT2
    cdef double complex p1 = (psi[2] + ph * psi[3]) * INV_SQRT2
    cdef double complex m0 = (psi[0] - ph * psi[1]) * INV_SQRT2
    cdef double complex m1 = (psi[2] - ph * psi[3]) * INV_SQRT2
    cdef double p_plus = abs2(p0) + abs2(p1)
    cdef double p_minus = abs2(m0) + abs2(m1)
    cdef double n
    if (r < p_plus and p_plus > 0.0) or p_minus <= 0.0:
        n = sqrt(p_plus)
        out[0] = p0 / n
        out[1] = p1 / n
        return 1
    n = sqrt(p_minus)
    out[0] = m0 / n
    out[1] = m1 / n
    return -1


cdef inline void evolve(const double complex[:, :] u, double complex c0, double complex c1,
                        double complex* psi) nogil:
    cdef int k
    for k in range(4):
        psi[k] = u[k, 0] * c0 + u[k, 2] * c1


def sample_outcomes(u_a, u_b, bob, double theta_a, double theta_b, r_a, r_b):
    cdef const double complex[:, :] ua = np.ascontiguousarray(u_a, dtype=np.complex128)
    cdef const double complex[:, :] ub = np.ascontiguousarray(u_b, dtype=np.complex128)
    cdef const double complex[:, :] b = np.ascontiguousarray(bob, dtype=np.complex128)
    cdef const double[:] ra = np.ascontiguousarray(r_a, dtype=np.float64)
    cdef const double[:] rb = np.ascontiguousarray(r_b, dtype=np.float64)
    cdef Py_ssize_t n = b.shape[0], i
    out_a = np.empty(n, dtype=np.int8)
    out_b = np.empty(n, dtype=np.int8)
    cdef signed char[:] oa = out_a
    cdef signed char[:] ob = out_b
    cdef double complex ph_a = cos(theta_a) - 1j * sin(theta_a)
    cdef double complex ph_b = cos(theta_b) - 1j * sin(theta_b)
    cdef double complex psi[4]
    cdef double complex w[2]
    with nogil:
        for i in range(n):
            evolve(ua, b[i, 0], b[i, 1], psi)
            oa[i] = measure_probe(psi, ph_a, ra[i], w)
            evolve(ub, w[0], w[1], psi)
            ob[i] = measure_probe(psi, ph_b, rb[i], w)
    return out_a, out_b
