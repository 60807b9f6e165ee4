"""NumPy implementation of the staircase kernels.

Mirrors :mod:`mpsqc._kernels` function for function; used when the compiled
extension is unavailable and as a cross-check in the test-suite.
"""
import numpy as np


def _ry(t):
    c, s = np.cos(0.5 * t), np.sin(0.5 * t)
    return np.array([[c, -s], [s, c]])


def _encode(angles, ancilla):
    n_batch, n_data = angles.shape
    psi = np.ones((n_batch, 1))
    for w in range(n_data):
        factor = np.stack([np.cos(angles[:, w]), np.sin(angles[:, w])], axis=1)
        psi = (psi[:, :, None] * factor[:, None, :]).reshape(n_batch, -1)
    if ancilla:
        psi = np.concatenate([psi, np.zeros_like(psi)], axis=1)
    return psi


def _run_blocks(psi, theta, n, start):
    # psi has shape (batch, 2, ..., 2); axis w + 1 holds wire w
    for b in range(start, n - 1):
        psi = np.moveaxis(np.tensordot(psi, _ry(theta[2 * b]), axes=([b + 1], [1])), -1, b + 1)
        psi = np.moveaxis(np.tensordot(psi, _ry(theta[2 * b + 1]), axes=([b + 2], [1])), -1, b + 2)
        idx = [slice(None)] * (n + 1)
        idx[b + 1] = 1
        idx = tuple(idx)
        psi[idx] = np.flip(psi[idx], axis=b + 1)
    return psi


def _p_one_last(psi, n):
    flat = psi.reshape(psi.shape[0], -1)
    return np.sum(flat[:, 1::2] ** 2, axis=1)


def staircase_scores(theta, angles, ancilla):
    theta = np.asarray(theta, dtype=np.float64)
    angles = np.asarray(angles, dtype=np.float64)
    if angles.ndim != 2:
        raise ValueError("angles must be a 2-d array")
    n = angles.shape[1] + (1 if ancilla else 0)
    if theta.shape[0] != 2 * (n - 1):
        raise ValueError(f"theta has {theta.shape[0]} entries, expected {2 * (n - 1)}")
    psi = _encode(angles, ancilla).reshape((angles.shape[0],) + (2,) * n)
    psi = _run_blocks(psi, theta, n, 0)
    return _p_one_last(psi, n)


def staircase_shift_scores(theta, angles, ancilla):
    theta = np.asarray(theta, dtype=np.float64)
    angles = np.asarray(angles, dtype=np.float64)
    n_params = theta.shape[0]
    out = np.empty((angles.shape[0], n_params, 2))
    for k in range(n_params):
        for sgn, shift in enumerate((np.pi / 2, -np.pi / 2)):
            shifted = theta.copy()
            shifted[k] += shift
            out[:, k, sgn] = staircase_scores(shifted, angles, ancilla)
    return out
