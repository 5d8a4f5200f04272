# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled interference-map kernel. See ``_kernels_py.py`` for the reference."""

from libc.math cimport sin, cos, sqrt, fabs

cdef double SINC_SERIES_CUTOFF = 1e-8


def interference_map(const double[::1] theta_rad, const double[::1] k_s, const double[::1] k_i,
                     double k_p, double crystal_um,
                     const double[::1] sec_kp, const double[:, ::1] sec_ks, const double[:, ::1] sec_ki,
                     const double[::1] sec_len_um, const double[::1] c0, const double[::1] tau,
                     double[:, ::1] out, bint modulated):
    cdef Py_ssize_t nl = k_s.shape[0]
    cdef Py_ssize_t nt = theta_rad.shape[0]
    cdef Py_ssize_t nsec = sec_len_um.shape[0]
    cdef Py_ssize_t i, j, m
    cdef double q2, delta, x, s, single, phase, ksm, kim
    cdef int err = 0
    with nogil:
        for i in range(nl):
            for j in range(nt):
                q2 = k_s[i] * sin(theta_rad[j])
                q2 = q2 * q2
                if q2 > k_i[i] * k_i[i]:
                    err = -(1 + <int>nsec)
                    break
                delta = (k_p - sqrt(k_s[i] * k_s[i] - q2) - sqrt(k_i[i] * k_i[i] - q2)) * crystal_um
                x = delta / 2.0
                if fabs(x) < SINC_SERIES_CUTOFF:
                    s = 1.0 - x * x / 6.0
                else:
                    s = sin(x) / x
                single = c0[i] * (s * s)
                if not modulated:
                    out[i, j] = single
                    continue
                phase = delta
                for m in range(nsec):
                    ksm = sec_ks[m, i]
                    kim = sec_ki[m, i]
                    if q2 > ksm * ksm or q2 > kim * kim:
                        err = -(1 + <int>m)
                        break
                    phase = phase + (sec_kp[m] - sqrt(ksm * ksm - q2) - sqrt(kim * kim - q2)) * sec_len_um[m]
                if err != 0:
                    break
                out[i, j] = single * (1.0 + tau[i] * cos(phase))
            if err != 0:
                break
    return err
