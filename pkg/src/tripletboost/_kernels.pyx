# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled constraint-sum kernels.

Same contracts as ``_kernels_py``. Reductions run in fixed constraint order,
so results are reproducible run to run on the same build.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp

NAME = "compiled"


def weighted_matvec(double[:, ::1] U, double[:, ::1] V, double[::1] w,
                    double[::1] x):
    cdef Py_ssize_t n = U.shape[0], dim = U.shape[1]
    cdef cnp.ndarray out = np.zeros(dim)
    cdef double[::1] y = out
    cdef Py_ssize_t r, d
    cdef double s, c
    for r in range(n):
        s = 0.0
        for d in range(dim):
            s += U[r, d] * x[d]
        c = w[r] * s
        for d in range(dim):
            y[d] += c * U[r, d]
        s = 0.0
        for d in range(dim):
            s += V[r, d] * x[d]
        c = w[r] * s
        for d in range(dim):
            y[d] -= c * V[r, d]
    return out


def margins_rank_one(double[:, ::1] U, double[:, ::1] V, double[::1] xi):
    cdef Py_ssize_t n = U.shape[0], dim = U.shape[1]
    cdef cnp.ndarray out = np.empty(n)
    cdef double[::1] h = out
    cdef Py_ssize_t r, d
    cdef double su, sv
    for r in range(n):
        su = 0.0
        sv = 0.0
        for d in range(dim):
            su += U[r, d] * xi[d]
            sv += V[r, d] * xi[d]
        h[r] = su * su - sv * sv
    return out


def margins_full(double[:, ::1] U, double[:, ::1] V, double[:, ::1] X):
    cdef Py_ssize_t n = U.shape[0], dim = U.shape[1]
    cdef cnp.ndarray out = np.empty(n)
    cdef double[::1] rho = out
    cdef Py_ssize_t r, d, e
    cdef double acc, row
    for r in range(n):
        acc = 0.0
        for d in range(dim):
            row = 0.0
            for e in range(dim):
                row += X[d, e] * U[r, e]
            acc += U[r, d] * row
        for d in range(dim):
            row = 0.0
            for e in range(dim):
                row += X[d, e] * V[r, e]
            acc -= V[r, d] * row
        rho[r] = acc
    return out


def line_search_lhs(double[::1] h, double[::1] u, double v, double w):
    cdef Py_ssize_t n = h.shape[0]
    cdef Py_ssize_t r
    cdef double m, e, acc
    m = -w * h[0]
    for r in range(1, n):
        e = -w * h[r]
        if e > m:
            m = e
    acc = 0.0
    for r in range(n):
        acc += (h[r] - v) * u[r] * exp(-w * h[r] - m)
    return acc
