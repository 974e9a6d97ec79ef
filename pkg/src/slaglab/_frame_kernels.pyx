# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 sweep for F' = F A(s) on SU(3) with polar re-projection."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, atan2, cos, sin, pow, hypot

cnp.import_array()

ctypedef double complex cplx


cdef inline void matmul(cplx[:, :] a, cplx[:, :] b, cplx[:, :] out) noexcept nogil:
    cdef int i, j, k
    cdef cplx s
    for i in range(3):
        for j in range(3):
            s = 0
            for k in range(3):
                s = s + a[i, k] * b[k, j]
            out[i, j] = s


cdef inline cplx det3(cplx[:, :] m) noexcept nogil:
    return (m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
            - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
            + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]))


cdef inline cplx conj(cplx z) noexcept nogil:
    return z.real - 1j * z.imag


cdef double unitarity_defect(cplx[:, :] m) noexcept nogil:
    """Frobenius norm of m^H m - I."""
    cdef int i, j, k
    cdef cplx s
    cdef double acc = 0.0
    for i in range(3):
        for j in range(3):
            s = 0
            for k in range(3):
                s = s + conj(m[k, i]) * m[k, j]
            if i == j:
                s = s - 1.0
            acc += s.real * s.real + s.imag * s.imag
    return sqrt(acc)


cdef void polar_su3(cplx[:, :] m, cplx[:, :] tmp) noexcept nogil:
    """Replace m by its nearest element of SU(3) (Newton polar iteration
    followed by removal of the determinant phase)."""
    cdef int it, i, j
    cdef cplx d, c
    cdef double change, mag, arg
    for it in range(20):
        d = det3(m)
        # inverse transpose-conjugate: inv(m)^H = conj(cofactor(m)) / conj(det)
        tmp[0, 0] = m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1]
        tmp[0, 1] = -(m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
        tmp[0, 2] = m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]
        tmp[1, 0] = -(m[0, 1] * m[2, 2] - m[0, 2] * m[2, 1])
        tmp[1, 1] = m[0, 0] * m[2, 2] - m[0, 2] * m[2, 0]
        tmp[1, 2] = -(m[0, 0] * m[2, 1] - m[0, 1] * m[2, 0])
        tmp[2, 0] = m[0, 1] * m[1, 2] - m[0, 2] * m[1, 1]
        tmp[2, 1] = -(m[0, 0] * m[1, 2] - m[0, 2] * m[1, 0])
        tmp[2, 2] = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        change = 0.0
        for i in range(3):
            for j in range(3):
                c = 0.5 * (m[i, j] + conj(tmp[i, j] / d))
                change += (c.real - m[i, j].real) ** 2 + (c.imag - m[i, j].imag) ** 2
                m[i, j] = c
        if change < 1e-32:
            break
    d = det3(m)
    arg = atan2(d.imag, d.real) / 3.0
    mag = pow(hypot(d.real, d.imag), 1.0 / 3.0)
    c = (cos(arg) - 1j * sin(arg)) / mag
    for i in range(3):
        for j in range(3):
            m[i, j] = m[i, j] * c


def sweep_lines(cplx[:, :, :] F0, cplx[:, :, :, :] A, cplx[:, :, :, :] Amid, double h,
                double drift_limit):
    """Integrate F' = F A along ``m`` independent lines.

    F0: (m, 3, 3) start frames; A: (m, n, 3, 3) node values;
    Amid: (m, n-1, 3, 3) half-step values.  Returns (frames (m, n, 3, 3),
    largest pre-projection unitarity defect).  Stops with a negative
    line index in the second slot of the defect tuple if the defect
    exceeds ``drift_limit``.
    """
    cdef Py_ssize_t m = A.shape[0], n = A.shape[1]
    out_arr = np.empty((m, n, 3, 3), dtype=np.complex128)
    cdef cplx[:, :, :, :] out = out_arr
    cdef cplx[:, :] F = np.empty((3, 3), dtype=np.complex128)
    cdef cplx[:, :] Y = np.empty((3, 3), dtype=np.complex128)
    cdef cplx[:, :] k1 = np.empty((3, 3), dtype=np.complex128)
    cdef cplx[:, :] k2 = np.empty((3, 3), dtype=np.complex128)
    cdef cplx[:, :] k3 = np.empty((3, 3), dtype=np.complex128)
    cdef cplx[:, :] k4 = np.empty((3, 3), dtype=np.complex128)
    cdef cplx[:, :] tmp = np.empty((3, 3), dtype=np.complex128)
    cdef Py_ssize_t line, s
    cdef int i, j
    cdef double worst = 0.0, defect
    with nogil:
        for line in range(m):
            for i in range(3):
                for j in range(3):
                    F[i, j] = F0[line, i, j]
                    out[line, 0, i, j] = F[i, j]
            for s in range(n - 1):
                matmul(F, A[line, s], k1)
                for i in range(3):
                    for j in range(3):
                        Y[i, j] = F[i, j] + 0.5 * h * k1[i, j]
                matmul(Y, Amid[line, s], k2)
                for i in range(3):
                    for j in range(3):
                        Y[i, j] = F[i, j] + 0.5 * h * k2[i, j]
                matmul(Y, Amid[line, s], k3)
                for i in range(3):
                    for j in range(3):
                        Y[i, j] = F[i, j] + h * k3[i, j]
                matmul(Y, A[line, s + 1], k4)
                for i in range(3):
                    for j in range(3):
                        F[i, j] = F[i, j] + h / 6.0 * (k1[i, j] + 2.0 * k2[i, j]
                                                       + 2.0 * k3[i, j] + k4[i, j])
                defect = unitarity_defect(F)
                if defect > worst:
                    worst = defect
                if defect > drift_limit:
                    break
                polar_su3(F, tmp)
                for i in range(3):
                    for j in range(3):
                        out[line, s + 1, i, j] = F[i, j]
            if worst > drift_limit:
                break
    return out_arr, worst
