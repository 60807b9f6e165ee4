# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for batched staircase-circuit scoring.

States are real: the angle encoding, RY and CNOT never leave the real
subspace, so the kernels keep one double per amplitude. Qubit 0 is the most
significant bit of the basis index.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, M_PI
from libc.string cimport memcpy

cnp.import_array()


cdef inline void _encode(double* psi, const double[:] ang, Py_ssize_t n_data,
                         Py_ssize_t dim, bint ancilla) noexcept nogil:
    cdef Py_ssize_t length = 1, j, w
    cdef double c, s, a
    psi[0] = 1.0
    for w in range(n_data):
        c = cos(ang[w])
        s = sin(ang[w])
        for j in range(length - 1, -1, -1):
            a = psi[j]
            psi[2 * j] = a * c
            psi[2 * j + 1] = a * s
        length *= 2
    if ancilla:
        for j in range(length, dim):
            psi[j] = 0.0


cdef inline void _ry(double* psi, Py_ssize_t dim, Py_ssize_t stride,
                     double angle) noexcept nogil:
    cdef double c = cos(0.5 * angle), s = sin(0.5 * angle), a, b
    cdef Py_ssize_t base = 0, j
    while base < dim:
        for j in range(base, base + stride):
            a = psi[j]
            b = psi[j + stride]
            psi[j] = c * a - s * b
            psi[j + stride] = s * a + c * b
        base += 2 * stride


cdef inline void _cnot(double* psi, Py_ssize_t dim, Py_ssize_t cbit,
                       Py_ssize_t tbit) noexcept nogil:
    cdef Py_ssize_t j
    cdef double a
    for j in range(dim):
        if (j & cbit) and not (j & tbit):
            a = psi[j]
            psi[j] = psi[j | tbit]
            psi[j | tbit] = a


cdef inline void _block(double* psi, Py_ssize_t n, Py_ssize_t dim, Py_ssize_t b,
                        double t0, double t1) noexcept nogil:
    cdef Py_ssize_t lo = (<Py_ssize_t>1) << (n - 1 - b)
    cdef Py_ssize_t hi = (<Py_ssize_t>1) << (n - 2 - b)
    _ry(psi, dim, lo, t0)
    _ry(psi, dim, hi, t1)
    _cnot(psi, dim, lo, hi)


cdef inline double _p_one_last(const double* psi, Py_ssize_t dim) noexcept nogil:
    cdef double acc = 0.0
    cdef Py_ssize_t j
    for j in range(1, dim, 2):
        acc += psi[j] * psi[j]
    return acc


def staircase_scores(const double[:] theta, const double[:, :] angles, bint ancilla):
    """Readout probability of ``|1>`` on the last wire for each angle row."""
    cdef Py_ssize_t n_batch = angles.shape[0], n_data = angles.shape[1]
    cdef Py_ssize_t n = n_data + (1 if ancilla else 0)
    cdef Py_ssize_t dim = (<Py_ssize_t>1) << n, n_blocks = n - 1
    cdef Py_ssize_t i, b
    if theta.shape[0] != 2 * n_blocks:
        raise ValueError(f"theta has {theta.shape[0]} entries, expected {2 * n_blocks}")
    out = np.empty(n_batch, dtype=np.float64)
    cdef double[:] out_v = out
    work = np.empty(dim, dtype=np.float64)
    cdef double[:] work_v = work
    cdef double* psi = &work_v[0]
    with nogil:
        for i in range(n_batch):
            _encode(psi, angles[i], n_data, dim, ancilla)
            for b in range(n_blocks):
                _block(psi, n, dim, b, theta[2 * b], theta[2 * b + 1])
            out_v[i] = _p_one_last(psi, dim)
    return out


def staircase_shift_scores(const double[:] theta, const double[:, :] angles, bint ancilla):
    """Scores with each parameter shifted by +pi/2 and -pi/2.

    Returns an array of shape ``(batch, n_params, 2)``; ``[..., 0]`` is the
    ``+pi/2`` evaluation. States before each block are cached so a shift in
    block ``b`` only replays blocks ``b`` onwards.
    """
    cdef Py_ssize_t n_batch = angles.shape[0], n_data = angles.shape[1]
    cdef Py_ssize_t n = n_data + (1 if ancilla else 0)
    cdef Py_ssize_t dim = (<Py_ssize_t>1) << n, n_blocks = n - 1
    cdef Py_ssize_t n_params = 2 * n_blocks
    cdef Py_ssize_t i, b, k, kb, sgn, bb
    cdef double t0, t1, shift
    if theta.shape[0] != n_params:
        raise ValueError(f"theta has {theta.shape[0]} entries, expected {n_params}")
    out = np.empty((n_batch, n_params, 2), dtype=np.float64)
    cdef double[:, :, :] out_v = out
    prefix = np.empty((n_blocks + 1, dim), dtype=np.float64)
    cdef double[:, :] pre = prefix
    work = np.empty(dim, dtype=np.float64)
    cdef double[:] work_v = work
    cdef double* psi = &work_v[0]
    with nogil:
        for i in range(n_batch):
            _encode(&pre[0, 0], angles[i], n_data, dim, ancilla)
            for b in range(n_blocks - 1):
                memcpy(&pre[b + 1, 0], &pre[b, 0], dim * sizeof(double))
                _block(&pre[b + 1, 0], n, dim, b, theta[2 * b], theta[2 * b + 1])
            for k in range(n_params):
                kb = k // 2
                for sgn in range(2):
                    shift = M_PI / 2 if sgn == 0 else -M_PI / 2
                    memcpy(psi, &pre[kb, 0], dim * sizeof(double))
                    t0 = theta[2 * kb]
                    t1 = theta[2 * kb + 1]
                    if k % 2 == 0:
                        t0 = t0 + shift
                    else:
                        t1 = t1 + shift
                    _block(psi, n, dim, kb, t0, t1)
                    for bb in range(kb + 1, n_blocks):
                        _block(psi, n, dim, bb, theta[2 * bb], theta[2 * bb + 1])
                    out_v[i, k, sgn] = _p_one_last(psi, dim)
    return out
