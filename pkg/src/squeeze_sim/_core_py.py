"""Pure-Python kernels with the same contract as the compiled core."""

import math

import numpy as np


def face_coefficients(w, left, right):
    cubes = np.concatenate(([left], np.asarray(w, dtype=float), [right])) ** 3
    return 0.5 * (cubes[:-1] + cubes[1:])


def flux_apply(a, u, h):
    ext = np.concatenate(([0.0], np.asarray(u, dtype=float), [0.0]))
    flux = np.asarray(a) * np.diff(ext)
    return np.diff(flux) / (h * h)


def flux_solve(a, rhs, h):
    n = len(rhs)
    a = [float(x) for x in a]
    h2 = h * h
    cp = [0.0] * n
    u = [0.0] * n
    m = -(a[0] + a[1])
    cp[0] = a[1] / m
    u[0] = float(rhs[0]) * h2 / m
    for j in range(1, n):
        m = -(a[j] + a[j + 1]) - a[j] * cp[j - 1]
        cp[j] = a[j + 1] / m
        u[j] = (float(rhs[j]) * h2 - a[j] * u[j - 1]) / m
    for j in range(n - 2, -1, -1):
        u[j] -= cp[j] * u[j + 1]
    return np.array(u)


def rotate(v, w, omega, t):
    vo = np.empty(len(v))
    wo = np.empty(len(v))
    for k in range(len(v)):
        om = float(omega[k])
        c = math.cos(om * t)
        s = math.sin(om * t)
        wo[k] = w[k] * c + v[k] * s / om
        vo[k] = -om * w[k] * s + v[k] * c
    return vo, wo
