# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled RK4 kernels for the heavy gyrostat field.

Arithmetic follows ``_kernels_py`` operation by operation so both
backends agree to rounding.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, isfinite

cnp.import_array()

cdef double BLOWUP = 1e12


cdef inline void _field(const double* x, double* out, const double* I,
                        const double* mu, double m, const double* r) noexcept nogil:
    cdef double w0 = x[0] / I[0]
    cdef double w1 = x[1] / I[1]
    cdef double w2 = x[2] / I[2]
    cdef double n0 = x[0] + mu[0]
    cdef double n1 = x[1] + mu[1]
    cdef double n2 = x[2] + mu[2]
    out[0] = n1 * w2 - n2 * w1
    out[1] = n2 * w0 - n0 * w2
    out[2] = n0 * w1 - n1 * w0
    out[3] = x[4] * w2 - x[5] * w1
    out[4] = x[5] * w0 - x[3] * w2
    out[5] = x[3] * w1 - x[4] * w0
    if m != 0.0:
        out[0] = out[0] + m * (x[4] * r[2] - x[5] * r[1])
        out[1] = out[1] + m * (x[5] * r[0] - x[3] * r[2])
        out[2] = out[2] + m * (x[3] * r[1] - x[4] * r[0])


cdef inline bint _step(double* x, double h, const double* I, const double* mu,
                       double m, const double* r) noexcept nogil:
    cdef double k1[6]
    cdef double k2[6]
    cdef double k3[6]
    cdef double k4[6]
    cdef double tmp[6]
    cdef double hh = 0.5 * h
    cdef double h6 = h / 6.0
    cdef int i
    cdef double nrm = 0.0
    _field(x, k1, I, mu, m, r)
    for i in range(6):
        tmp[i] = x[i] + hh * k1[i]
    _field(tmp, k2, I, mu, m, r)
    for i in range(6):
        tmp[i] = x[i] + hh * k2[i]
    _field(tmp, k3, I, mu, m, r)
    for i in range(6):
        tmp[i] = x[i] + h * k3[i]
    _field(tmp, k4, I, mu, m, r)
    for i in range(6):
        x[i] = x[i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        nrm += x[i] * x[i]
    return isfinite(nrm) and sqrt(nrm) <= BLOWUP


def rk4_gyrostat(double[:, ::1] x0s, double[::1] inertia, double[::1] mu,
                 double m, double[::1] r_G, double h, Py_ssize_t nsteps,
                 Py_ssize_t stride=1):
    """Integrate a batch of initial states, saving every ``stride`` steps.

    Returns ``(states, nvalid)``: ``states`` has shape
    ``(N, nsteps // stride + 1, 6)`` and ``nvalid[j]`` counts the saved
    states of trajectory ``j`` before it blew up (all of them otherwise).
    """
    cdef Py_ssize_t N = x0s.shape[0]
    cdef Py_ssize_t nsave = nsteps // stride + 1
    out_arr = np.full((N, nsave, 6), np.nan)
    nvalid_arr = np.zeros(N, dtype=np.intp)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t[::1] nvalid = nvalid_arr
    cdef double x[6]
    cdef Py_ssize_t j, n, i, s
    with nogil:
        for j in range(N):
            for i in range(6):
                x[i] = x0s[j, i]
                out[j, 0, i] = x[i]
            s = 1
            for n in range(1, nsteps + 1):
                if not _step(x, h, &inertia[0], &mu[0], m, &r_G[0]):
                    break
                if n % stride == 0:
                    for i in range(6):
                        out[j, s, i] = x[i]
                    s += 1
            nvalid[j] = s
    return out_arr, nvalid_arr


def rk4_max_deviation(double[:, ::1] x0s, double[::1] inertia, double[::1] mu,
                      double m, double[::1] r_G, double h, Py_ssize_t nsteps,
                      double[::1] xe):
    """Sup over the run of ``|M - M_e|``, ``|g - g_e|`` and the full distance.

    Returns ``(dev, blown)`` with ``dev`` of shape ``(N, 3)``.
    """
    cdef Py_ssize_t N = x0s.shape[0]
    dev_arr = np.zeros((N, 3))
    blown_arr = np.zeros(N, dtype=np.uint8)
    cdef double[:, ::1] dev = dev_arr
    cdef unsigned char[::1] blown = blown_arr
    cdef double x[6]
    cdef double dm, dg, d
    cdef Py_ssize_t j, n, i
    with nogil:
        for j in range(N):
            for i in range(6):
                x[i] = x0s[j, i]
            for n in range(nsteps + 1):
                if n > 0:
                    if not _step(x, h, &inertia[0], &mu[0], m, &r_G[0]):
                        blown[j] = 1
                        dev[j, 0] = BLOWUP
                        dev[j, 1] = BLOWUP
                        dev[j, 2] = BLOWUP
                        break
                dm = 0.0
                dg = 0.0
                for i in range(3):
                    d = x[i] - xe[i]
                    dm += d * d
                    d = x[i + 3] - xe[i + 3]
                    dg += d * d
                if sqrt(dm) > dev[j, 0]:
                    dev[j, 0] = sqrt(dm)
                if sqrt(dg) > dev[j, 1]:
                    dev[j, 1] = sqrt(dg)
                if sqrt(dm + dg) > dev[j, 2]:
                    dev[j, 2] = sqrt(dm + dg)
    return dev_arr, blown_arr.astype(bool)
