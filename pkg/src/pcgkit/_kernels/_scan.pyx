# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled recurrent-scan kernel; mirrors reference.py exactly."""

import numpy as np

cimport numpy as cnp
from libc.math cimport tanh

cnp.import_array()

NAME = "cython"


def scan_forward(double[:, ::1] x, double[:, ::1] u, double[::1] h0):
    cdef Py_ssize_t steps = x.shape[0]
    cdef Py_ssize_t width = x.shape[1]
    out = np.empty((steps, width), dtype=np.float64)
    cdef double[:, ::1] h = out
    prev_arr = np.ascontiguousarray(h0, dtype=np.float64).copy()
    cdef double[::1] prev = prev_arr
    cdef Py_ssize_t t, i, j
    cdef double acc
    for t in range(steps):
        for j in range(width):
            acc = x[t, j]
            for i in range(width):
                acc += prev[i] * u[i, j]
            h[t, j] = tanh(acc)
        for j in range(width):
            prev[j] = h[t, j]
    return out


def scan_backward(double[:, ::1] u, double[:, ::1] h, double[::1] h0,
                  double[:, ::1] dh):
    cdef Py_ssize_t steps = h.shape[0]
    cdef Py_ssize_t width = h.shape[1]
    dx_arr = np.empty((steps, width), dtype=np.float64)
    du_arr = np.zeros((width, width), dtype=np.float64)
    carry_arr = np.zeros(width, dtype=np.float64)
    da_arr = np.empty(width, dtype=np.float64)
    cdef double[:, ::1] dx = dx_arr
    cdef double[:, ::1] du = du_arr
    cdef double[::1] carry = carry_arr
    cdef double[::1] da = da_arr
    cdef Py_ssize_t t, i, j
    cdef double acc, prev_i
    for t in range(steps - 1, -1, -1):
        for j in range(width):
            da[j] = (dh[t, j] + carry[j]) * (1.0 - h[t, j] * h[t, j])
            dx[t, j] = da[j]
        for i in range(width):
            prev_i = h[t - 1, i] if t > 0 else h0[i]
            for j in range(width):
                du[i, j] += prev_i * da[j]
        for i in range(width):
            acc = 0.0
            for j in range(width):
                acc += da[j] * u[i, j]
            carry[i] = acc
    return dx_arr, du_arr, carry_arr
