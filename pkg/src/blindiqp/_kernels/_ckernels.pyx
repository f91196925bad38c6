# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.  Signatures mirror ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil
    int __builtin_ctzll(unsigned long long) nogil


def apply_1q(double complex[::1] amps, int qubit, u):
    cdef double complex u00 = u[0][0], u01 = u[0][1], u10 = u[1][0], u11 = u[1][1]
    cdef Py_ssize_t n = amps.shape[0]
    cdef Py_ssize_t stride = (<Py_ssize_t>1) << qubit
    cdef Py_ssize_t base, k, i0, i1
    cdef double complex a0, a1
    with nogil:
        base = 0
        while base < n:
            for k in range(stride):
                i0 = base + k
                i1 = i0 + stride
                a0 = amps[i0]
                a1 = amps[i1]
                amps[i0] = u00 * a0 + u01 * a1
                amps[i1] = u10 * a0 + u11 * a1
            base += 2 * stride


def apply_diag(double complex[::1] amps, int qubit, double complex d0, double complex d1):
    cdef Py_ssize_t n = amps.shape[0]
    cdef Py_ssize_t i
    cdef Py_ssize_t mask = (<Py_ssize_t>1) << qubit
    with nogil:
        for i in range(n):
            if i & mask:
                amps[i] = amps[i] * d1
            else:
                amps[i] = amps[i] * d0


def apply_cz(double complex[::1] amps, int i, int j):
    cdef Py_ssize_t n = amps.shape[0]
    cdef Py_ssize_t idx
    cdef Py_ssize_t mask = ((<Py_ssize_t>1) << i) | ((<Py_ssize_t>1) << j)
    with nogil:
        for idx in range(n):
            if (idx & mask) == mask:
                amps[idx] = -amps[idx]


def measure_probs(double complex[::1] amps, int qubit, u):
    """Unnormalized probabilities of both outcomes; the rows of ``u`` are the bras."""
    cdef double complex u00 = u[0][0], u01 = u[0][1], u10 = u[1][0], u11 = u[1][1]
    cdef Py_ssize_t n = amps.shape[0]
    cdef Py_ssize_t stride = (<Py_ssize_t>1) << qubit
    cdef Py_ssize_t base, k, i0
    cdef double complex a0, a1, b0, b1
    cdef double p0 = 0.0, p1 = 0.0
    with nogil:
        base = 0
        while base < n:
            for k in range(stride):
                i0 = base + k
                a0 = amps[i0]
                a1 = amps[i0 + stride]
                b0 = u00 * a0 + u01 * a1
                b1 = u10 * a0 + u11 * a1
                p0 += b0.real * b0.real + b0.imag * b0.imag
                p1 += b1.real * b1.real + b1.imag * b1.imag
            base += 2 * stride
    return p0, p1


def project(double complex[::1] amps, int qubit, u, int outcome, double scale):
    """Replace each pair by ``scale * v <v|pair>`` with ``<v|`` row ``outcome`` of ``u``."""
    cdef double complex w0 = u[outcome][0], w1 = u[outcome][1]
    cdef double complex v0 = w0.conjugate() * scale, v1 = w1.conjugate() * scale
    cdef Py_ssize_t n = amps.shape[0]
    cdef Py_ssize_t stride = (<Py_ssize_t>1) << qubit
    cdef Py_ssize_t base, k, i0
    cdef double complex c
    with nogil:
        base = 0
        while base < n:
            for k in range(stride):
                i0 = base + k
                c = w0 * amps[i0] + w1 * amps[i0 + stride]
                amps[i0] = v0 * c
                amps[i0 + stride] = v1 * c
            base += 2 * stride


def phase_sums(uint64_t[::1] rows, int n_bits):
    cdef Py_ssize_t size = (<Py_ssize_t>1) << n_bits
    cdef Py_ssize_t n_rows = rows.shape[0]
    out = np.zeros(size, dtype=np.int64)
    cdef int64_t[::1] view = out
    cdef Py_ssize_t y, h
    cdef int64_t acc
    with nogil:
        for y in range(size):
            acc = 0
            for h in range(n_rows):
                if __builtin_popcountll(rows[h] & <uint64_t>y) & 1:
                    acc -= 1
                else:
                    acc += 1
            view[y] = acc
    return out


def fwht(double complex[::1] a):
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t h = 1, i, j
    cdef double complex x, y
    with nogil:
        while h < n:
            i = 0
            while i < n:
                for j in range(i, i + h):
                    x = a[j]
                    y = a[j + h]
                    a[j] = x + y
                    a[j + h] = x - y
                i += 2 * h
            h *= 2


def weight_distribution(uint64_t[::1] generators, int length):
    cdef Py_ssize_t k = generators.shape[0]
    counts = np.zeros(length + 1, dtype=np.int64)
    cdef int64_t[::1] view = counts
    cdef uint64_t word = 0
    cdef uint64_t step
    cdef uint64_t total = (<uint64_t>1) << k
    with nogil:
        view[0] += 1
        for step in range(1, total):
            word ^= generators[__builtin_ctzll(step)]
            view[__builtin_popcountll(word)] += 1
    return counts
