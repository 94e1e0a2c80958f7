# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: gate application and batched ansatz preparation.

Mirrors the signatures of ``_fallback``.  Qubit 0 is the most
significant bit of the basis index.
"""

import numpy as np

cimport cython
from libc.math cimport cos, sin


def apply_1q(state, gate, int n, int target):
    cdef double complex[::1] s = state
    cdef const double complex[:, ::1] g = np.ascontiguousarray(gate, dtype=np.complex128)
    cdef int m = n - 1 - target
    cdef Py_ssize_t tk = 1 << m
    cdef Py_ssize_t nstates = 1 << (n - 1)
    cdef Py_ssize_t k, i0, i1
    cdef double complex a, b
    for k in range(nstates):
        i0 = ((k >> m) << (m + 1)) | (k & (tk - 1))
        i1 = i0 | tk
        a = s[i0]
        b = s[i1]
        s[i0] = g[0, 0] * a + g[0, 1] * b
        s[i1] = g[1, 0] * a + g[1, 1] * b
    return state


def apply_2q(state, gate, int n, int t0, int t1):
    cdef double complex[::1] s = state
    cdef const double complex[:, ::1] g = np.ascontiguousarray(gate, dtype=np.complex128)
    cdef int m0 = n - 1 - t0   # bit position of the gate's high bit
    cdef int m1 = n - 1 - t1
    cdef int lo = m0 if m0 < m1 else m1
    cdef int hi = m0 if m0 > m1 else m1
    cdef Py_ssize_t nstates = 1 << (n - 2)
    cdef Py_ssize_t k, base, r, c
    cdef Py_ssize_t idx[4]
    cdef double complex amp[4]
    cdef double complex acc
    for k in range(nstates):
        base = ((k >> lo) << (lo + 1)) | (k & ((1 << lo) - 1))
        base = ((base >> hi) << (hi + 1)) | (base & ((1 << hi) - 1))
        for r in range(4):
            idx[r] = base
            if r & 2:
                idx[r] |= 1 << m0
            if r & 1:
                idx[r] |= 1 << m1
            amp[r] = s[idx[r]]
        for r in range(4):
            acc = 0
            for c in range(4):
                acc = acc + g[r, c] * amp[c]
            s[idx[r]] = acc
    return state


def apply_3q(state, gate, int n, int t0, int t1, int t2):
    cdef double complex[::1] s = state
    cdef const double complex[:, ::1] g = np.ascontiguousarray(gate, dtype=np.complex128)
    cdef int m0 = n - 1 - t0
    cdef int m1 = n - 1 - t1
    cdef int m2 = n - 1 - t2
    cdef int pos[3]
    cdef int tmp, i, j
    pos[0] = m0
    pos[1] = m1
    pos[2] = m2
    for i in range(2):          # sort ascending for bit insertion
        for j in range(2 - i):
            if pos[j] > pos[j + 1]:
                tmp = pos[j]
                pos[j] = pos[j + 1]
                pos[j + 1] = tmp
    cdef Py_ssize_t nstates = 1 << (n - 3)
    cdef Py_ssize_t k, base, r, c
    cdef Py_ssize_t idx[8]
    cdef double complex amp[8]
    cdef double complex acc
    for k in range(nstates):
        base = k
        for i in range(3):
            base = ((base >> pos[i]) << (pos[i] + 1)) | (base & ((1 << pos[i]) - 1))
        for r in range(8):
            idx[r] = base
            if r & 4:
                idx[r] |= 1 << m0
            if r & 2:
                idx[r] |= 1 << m1
            if r & 1:
                idx[r] |= 1 << m2
            amp[r] = s[idx[r]]
        for r in range(8):
            acc = 0
            for c in range(8):
                acc = acc + g[r, c] * amp[c]
            s[idx[r]] = acc
    return state


def ry_ansatz_states(thetas, int n, int layers, pairs):
    """Batched RY+CNOT ansatz preparation; returns float64 (batch, 2**n)."""
    cdef const double[:, ::1] th = np.ascontiguousarray(thetas, dtype=np.float64)
    cdef const long[:, ::1] pr = np.ascontiguousarray(pairs, dtype=np.int64).reshape(-1, 2)
    cdef Py_ssize_t batch = th.shape[0]
    cdef Py_ssize_t dim = 1 << n
    out = np.zeros((batch, dim), dtype=np.float64)
    cdef double[:, ::1] st = out
    cdef Py_ssize_t b, k, i0, i1
    cdef int layer, q, p, m
    cdef Py_ssize_t tk, nstates, cbit, tbit
    cdef double c, s, x0, x1
    cdef Py_ssize_t npairs = pr.shape[0]
    for b in range(batch):
        st[b, 0] = 1.0
        for layer in range(layers):
            for q in range(n):
                c = cos(0.5 * th[b, layer * n + q])
                s = sin(0.5 * th[b, layer * n + q])
                m = n - 1 - q
                tk = 1 << m
                nstates = 1 << (n - 1)
                for k in range(nstates):
                    i0 = ((k >> m) << (m + 1)) | (k & (tk - 1))
                    i1 = i0 | tk
                    x0 = st[b, i0]
                    x1 = st[b, i1]
                    st[b, i0] = c * x0 - s * x1
                    st[b, i1] = s * x0 + c * x1
            for p in range(npairs):
                cbit = 1 << (n - 1 - pr[p, 0])
                tbit = 1 << (n - 1 - pr[p, 1])
                for k in range(dim):
                    if (k & cbit) and not (k & tbit):
                        i1 = k | tbit
                        x0 = st[b, k]
                        st[b, k] = st[b, i1]
                        st[b, i1] = x0
    return out
