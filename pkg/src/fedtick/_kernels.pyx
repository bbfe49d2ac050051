# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for local SGD on quadratic clients."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def quadratic_round(const double[::1] x,
                    const double[:, :, :] A,
                    const double[:, :] B,
                    double eta,
                    Py_ssize_t k,
                    const double[:, :, :] noise):
    """Run ``k`` local SGD steps from ``x`` on each of ``m`` quadratic clients.

    ``A`` is (m, d, d), ``B`` is (m, d) and ``noise`` is (m, k, d) additive
    gradient noise. Returns the client models (m, d) and the loss of every
    client evaluated at ``x`` (the first local step).
    """
    cdef Py_ssize_t m = B.shape[0]
    cdef Py_ssize_t d = x.shape[0]
    cdef Py_ssize_t c, step, i, j
    cdef double acc, loss
    out = np.empty((m, d), dtype=np.float64)
    first = np.empty(m, dtype=np.float64)
    cdef double[:, ::1] out_v = out
    cdef double[::1] first_v = first
    cdef double[::1] diff = np.empty(d, dtype=np.float64)
    cdef double[::1] cur = np.empty(d, dtype=np.float64)

    with nogil:
        for c in range(m):
            for i in range(d):
                cur[i] = x[i]
            for step in range(k):
                for i in range(d):
                    diff[i] = cur[i] - B[c, i]
                if step == 0:
                    loss = 0.0
                    for i in range(d):
                        acc = 0.0
                        for j in range(d):
                            acc = acc + A[c, i, j] * diff[j]
                        loss = loss + diff[i] * acc
                    first_v[c] = 0.5 * loss
                for i in range(d):
                    acc = 0.0
                    for j in range(d):
                        acc = acc + A[c, i, j] * diff[j]
                    cur[i] = cur[i] - eta * (acc + noise[c, step, i])
            for i in range(d):
                out_v[c, i] = cur[i]
    return out, first


def k_rounds_total(long k0, long rounds):
    """Sum of ceil(k0 / r**(1/3)) for r = 1..rounds using exact integer tests."""
    cdef long r, k
    cdef long long total = 0
    cdef long long k0_cubed = <long long>k0 * k0 * k0
    k = k0
    for r in range(1, rounds + 1):
        # k is non-increasing in r; walk it down while (k-1)^3 * r >= k0^3.
        while k > 1 and <long long>(k - 1) * (k - 1) * (k - 1) * r >= k0_cubed:
            k -= 1
        total += k
    return total
