# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the hot analytics loops.

Mirrors _pykernels exactly: nearest-centroid assignment, mean pairwise
distance, and one stochastic sub-gradient epoch of the linear classifier.
"""

from libc.math cimport INFINITY, sqrt

import numpy as np

BACKEND_NAME = "c"


def assign_clusters(double[:, ::1] X, double[:, ::1] C):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t k = C.shape[0]
    labels_arr = np.empty(n, dtype=np.int64)
    sqd_arr = np.empty(n, dtype=np.float64)
    cdef long long[::1] labels = labels_arr
    cdef double[::1] sqd = sqd_arr
    cdef Py_ssize_t i, c, j, best_c
    cdef double best, acc, diff
    for i in range(n):
        best = INFINITY
        best_c = 0
        for c in range(k):
            acc = 0.0
            for j in range(d):
                diff = X[i, j] - C[c, j]
                acc += diff * diff
            if acc < best:  # strict: ties keep the lowest index
                best = acc
                best_c = c
        labels[i] = best_c
        sqd[i] = best
    return labels_arr, sqd_arr


def mean_pairwise_distance(double[:, ::1] X):
    cdef Py_ssize_t m = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    if m < 2:
        return 0.0
    cdef double total = 0.0
    cdef double acc, diff
    cdef Py_ssize_t i, j, f
    for i in range(m - 1):
        for j in range(i + 1, m):
            acc = 0.0
            for f in range(d):
                diff = X[i, f] - X[j, f]
                acc += diff * diff
            total += sqrt(acc)
    return total / (m * (m - 1) / 2.0)


def svm_epoch(double[:, ::1] X, double[::1] y, long long[::1] order, double[::1] w, double b, double lam, long long t):
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t m = order.shape[0]
    cdef Py_ssize_t pos, i, j
    cdef double eta, margin, scale, step
    for pos in range(m):
        i = order[pos]
        t += 1
        eta = 1.0 / (lam * t)
        margin = 0.0
        for j in range(d):
            margin += X[i, j] * w[j]
        margin = y[i] * (margin + b)
        scale = 1.0 - eta * lam
        for j in range(d):
            w[j] *= scale
        if margin < 1.0:
            step = eta * y[i]
            for j in range(d):
                w[j] += step * X[i, j]
            b += step
    return b, t
