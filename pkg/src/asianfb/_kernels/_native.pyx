# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Thomas kernel; mirrors pure.thomas operation for operation."""

import numpy as np


def thomas(lower, diag, upper, rhs, double pivot_floor):
    """Solve the tridiagonal system; see asianfb._kernels.pure.thomas."""
    cdef double[::1] a = np.ascontiguousarray(lower, dtype=np.float64)
    cdef double[::1] c = np.ascontiguousarray(diag, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(upper, dtype=np.float64)
    cdef double[::1] d = np.ascontiguousarray(rhs, dtype=np.float64)
    cdef Py_ssize_t n = c.shape[0]
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] x = out
    cp_arr = np.zeros(n, dtype=np.float64)
    dp_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] cp = cp_arr
    cdef double[::1] dp = dp_arr
    cdef Py_ssize_t i
    cdef double piv

    piv = c[0]
    if piv < pivot_floor and -piv < pivot_floor:
        return out, 0
    if n > 1:
        cp[0] = b[0] / piv
    dp[0] = d[0] / piv
    for i in range(1, n):
        piv = c[i] - a[i - 1] * cp[i - 1]
        if piv < pivot_floor and -piv < pivot_floor:
            return out, i
        if i < n - 1:
            cp[i] = b[i] / piv
        dp[i] = (d[i] - a[i - 1] * dp[i - 1]) / piv
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return out, -1
