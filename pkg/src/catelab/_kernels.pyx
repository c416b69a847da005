# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Signatures mirror :mod:`catelab._fallback`."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt, copysign, NAN

cnp.import_array()

BACKEND = "compiled"


def simulate_linear(double[:, ::1] g, double[::1] e, double[::1] u,
                    double mu_x, double mu_z, double l00, double l10, double l11,
                    betas, double noise_sd, int prop_kind, double const_p):
    cdef Py_ssize_t n = g.shape[0], i
    cdef double b0 = betas[0], b1 = betas[1], b2 = betas[2]
    cdef double b3 = betas[3], b4 = betas[4], b5 = betas[5]
    x_arr = np.empty(n, dtype=np.float64)
    z_arr = np.empty(n, dtype=np.float64)
    a_arr = np.empty(n, dtype=np.int8)
    y0_arr = np.empty(n, dtype=np.float64)
    y1_arr = np.empty(n, dtype=np.float64)
    y_arr = np.empty(n, dtype=np.float64)
    ite_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] x = x_arr, z = z_arr, y0 = y0_arr, y1 = y1_arr, y = y_arr, ite = ite_arr
    cdef signed char[::1] a = a_arr
    cdef double xi, zi, p, base, tau
    with nogil:
        for i in range(n):
            xi = mu_x + l00 * g[i, 0]
            zi = mu_z + (l10 * g[i, 0] + l11 * g[i, 1])
            if prop_kind == 0:
                p = 1.0 / (1.0 + exp(-xi))
            elif prop_kind == 1:
                p = 1.0 / (1.0 + exp(zi - xi))
            else:
                p = const_p
            base = b0 + b2 * xi + b3 * zi + noise_sd * e[i]
            tau = b1 + b4 * xi + b5 * zi
            x[i] = xi
            z[i] = zi
            y0[i] = base
            y1[i] = base + tau
            ite[i] = y1[i] - y0[i]
            if u[i] < p:
                a[i] = 1
                y[i] = y1[i]
            else:
                a[i] = 0
                y[i] = y0[i]
    return x_arr, z_arr, a_arr, y0_arr, y1_arr, y_arr, ite_arr


def fit_interaction(double[::1] a, double[::1] x, double[::1] y):
    """Householder QR least squares on the implicit design [1, a, x, a*x]."""
    cdef Py_ssize_t n = a.shape[0], i, j, k
    cdef Py_ssize_t p = 4
    work = np.empty((p, n), dtype=np.float64)
    rhs = np.array(y, dtype=np.float64, copy=True)
    coef_arr = np.empty(p, dtype=np.float64)
    rdiag_arr = np.empty(p, dtype=np.float64)
    colnorm_arr = np.zeros(p, dtype=np.float64)
    cdef double[:, ::1] A = work
    cdef double[::1] b = rhs, coef = coef_arr, rdiag = rdiag_arr, colnorm = colnorm_arr
    cdef double norm, alpha, akk, vnorm2, s, rss = 0.0, r, fitted
    cdef bint singular = False
    with nogil:
        for i in range(n):
            A[0, i] = 1.0
            A[1, i] = a[i]
            A[2, i] = x[i]
            A[3, i] = a[i] * x[i]
        for k in range(p):
            s = 0.0
            for i in range(n):
                s = s + A[k, i] * A[k, i]
            colnorm[k] = sqrt(s)
        for k in range(p):
            s = 0.0
            for i in range(k, n):
                s = s + A[k, i] * A[k, i]
            norm = sqrt(s)
            if norm == 0.0:
                rdiag[k] = 0.0
                singular = True
                continue
            akk = A[k, k]
            alpha = -copysign(norm, akk)
            # ||v||^2 for v = column - alpha * e_k
            vnorm2 = 2.0 * norm * (norm + (akk if akk > 0 else -akk))
            A[k, k] = akk - alpha
            for j in range(k + 1, p):
                s = 0.0
                for i in range(k, n):
                    s = s + A[k, i] * A[j, i]
                s = 2.0 * s / vnorm2
                for i in range(k, n):
                    A[j, i] = A[j, i] - s * A[k, i]
            s = 0.0
            for i in range(k, n):
                s = s + A[k, i] * b[i]
            s = 2.0 * s / vnorm2
            for i in range(k, n):
                b[i] = b[i] - s * A[k, i]
            rdiag[k] = alpha
        if singular:
            for k in range(p):
                coef[k] = NAN
            rss = NAN
        else:
            for k in range(p - 1, -1, -1):
                s = b[k]
                for j in range(k + 1, p):
                    s = s - A[j, k] * coef[j]
                coef[k] = s / rdiag[k]
            for i in range(n):
                fitted = coef[0] + coef[1] * a[i] + coef[2] * x[i] + coef[3] * (a[i] * x[i])
                r = y[i] - fitted
                rss = rss + r * r
    return coef_arr, rss, rdiag_arr, colnorm_arr


def discordance_stats(double[::1] c, double[::1] t):
    """Two-pass moments (n denominator) and opposite-sign count."""
    cdef Py_ssize_t n = c.shape[0], i
    cdef double mc = 0.0, mt = 0.0, scc = 0.0, stt = 0.0, sct = 0.0, dc, dt
    cdef Py_ssize_t opposite = 0
    with nogil:
        for i in range(n):
            mc = mc + c[i]
            mt = mt + t[i]
        mc = mc / n
        mt = mt / n
        for i in range(n):
            dc = c[i] - mc
            dt = t[i] - mt
            scc = scc + dc * dc
            stt = stt + dt * dt
            sct = sct + dc * dt
            if (c[i] < 0.0 and t[i] > 0.0) or (c[i] > 0.0 and t[i] < 0.0):
                opposite = opposite + 1
    return mc, mt, scc / n, stt / n, sct / n, opposite
