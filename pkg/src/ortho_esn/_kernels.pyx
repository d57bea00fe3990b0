# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled recurrence for driving a tanh reservoir.

Counterpart of :mod:`ortho_esn._pykernels`; both expose the same functions.
"""
import numpy as np

from libc.math cimport tanh
from libc.string cimport memcpy
from scipy.linalg.cython_blas cimport dgemv


def drive_states(const double[:, ::1] W, const double[:, ::1] drive,
                 const double[::1] x0):
    """Iterate ``x_t = tanh(W x_{t-1} + drive_t)`` and return all states.

    ``W`` is C-ordered, so BLAS sees its transpose; ``trans='T'`` undoes that.
    """
    cdef int k = W.shape[0]
    cdef Py_ssize_t T = drive.shape[0]
    if W.shape[1] != k or drive.shape[1] != k or x0.shape[0] != k:
        raise ValueError("shape mismatch between W, drive and x0")

    out = np.empty((T, k), dtype=np.float64)
    cdef double[:, ::1] states = out
    if T == 0:
        return out

    cdef char trans = b'T'
    cdef int inc = 1
    cdef double one = 1.0
    cdef Py_ssize_t t
    cdef int i
    cdef const double *prev = &x0[0]
    cdef double *row

    with nogil:
        for t in range(T):
            row = &states[t, 0]
            memcpy(row, &drive[t, 0], k * sizeof(double))
            dgemv(&trans, &k, &k, &one, <double *> &W[0, 0], &k,
                  <double *> prev, &inc, &one, row, &inc)
            for i in range(k):
                row[i] = tanh(row[i])
            prev = row
    return out
