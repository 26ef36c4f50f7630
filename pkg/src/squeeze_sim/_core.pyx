# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: flux-form tridiagonal operator and per-mode rotation."""

import numpy as np
from libc.math cimport cos, sin


def face_coefficients(const double[::1] w, double left, double right):
    cdef Py_ssize_t n = w.shape[0], j
    out = np.empty(n + 1)
    cdef double[::1] a = out
    cdef double prev = left * left * left, cur
    for j in range(n):
        cur = w[j] * w[j] * w[j]
        a[j] = 0.5 * (prev + cur)
        prev = cur
    a[n] = 0.5 * (prev + right * right * right)
    return out


def flux_apply(const double[::1] a, const double[::1] u, double h):
    cdef Py_ssize_t n = u.shape[0], j
    out = np.empty(n)
    cdef double[::1] r = out
    cdef double inv = 1.0 / (h * h), left, right
    for j in range(n):
        left = u[j - 1] if j > 0 else 0.0
        right = u[j + 1] if j < n - 1 else 0.0
        r[j] = (a[j + 1] * (right - u[j]) - a[j] * (u[j] - left)) * inv
    return out


def flux_solve(const double[::1] a, const double[::1] rhs, double h):
    cdef Py_ssize_t n = rhs.shape[0], j
    out = np.empty(n)
    cdef double[::1] u = out
    cdef double[::1] cp = np.empty(n)
    cdef double h2 = h * h, m, lo
    m = -(a[0] + a[1])
    cp[0] = a[1] / m
    u[0] = rhs[0] * h2 / m
    for j in range(1, n):
        lo = a[j]
        m = -(a[j] + a[j + 1]) - lo * cp[j - 1]
        cp[j] = a[j + 1] / m
        u[j] = (rhs[j] * h2 - lo * u[j - 1]) / m
    for j in range(n - 2, -1, -1):
        u[j] -= cp[j] * u[j + 1]
    return out


def rotate(const double[::1] v, const double[::1] w, const double[::1] omega, double t):
    cdef Py_ssize_t k, n = v.shape[0]
    vo = np.empty(n)
    wo = np.empty(n)
    cdef double[::1] vn = vo
    cdef double[::1] wn = wo
    cdef double c, s, om
    for k in range(n):
        om = omega[k]
        c = cos(om * t)
        s = sin(om * t)
        wn[k] = w[k] * c + v[k] * s / om
        vn[k] = -om * w[k] * s + v[k] * c
    return vo, wo
