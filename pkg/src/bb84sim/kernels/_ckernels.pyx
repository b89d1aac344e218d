# cython: boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled measurement kernel: the per-qubit hot loop of the Monte Carlo
trial runner, without the temporary arrays the numpy version allocates."""

import numpy as np


def measure_bits(const unsigned char[::1] prep_basis,
                 const unsigned char[::1] prep_bit,
                 const unsigned char[::1] flip,
                 const signed char[::1] eve_basis,
                 const unsigned char[::1] bob_basis,
                 const unsigned char[::1] coin):
    cdef Py_ssize_t n = prep_basis.shape[0]
    out_arr = np.empty(n, dtype=np.uint8)
    cdef unsigned char[::1] out = out_arr
    cdef Py_ssize_t i
    cdef signed char e
    cdef unsigned char p, det
    # branchless select: random inputs would defeat the branch predictor
    for i in range(n):
        e = eve_basis[i]
        p = prep_basis[i]
        det = (((e < 0) | (e == <signed char> p)) & (bob_basis[i] == p))
        out[i] = <unsigned char> ((det * (prep_bit[i] ^ flip[i])) | ((det ^ 1) * coin[i]))
    return out_arr
