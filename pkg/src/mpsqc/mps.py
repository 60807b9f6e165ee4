"""Open-boundary matrix product states.

A state on ``L`` qubits is a chain of rank-3 tensors ``A[k]`` of shape
``(chi_{k-1}, 2, chi_k)`` with ``chi_0 = chi_L = 1``; the amplitude of a bit
string is the product of the selected matrices ``A[k][:, b_k, :]``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, ResourceError, UnsupportedTopologyError
from .simcore import MAX_QUBITS, Gate, StateVector

SVD_CUTOFF = 1e-12

_Z = np.array([1.0, -1.0])


@dataclass(frozen=True)
class MpsState:
    tensors: tuple
    max_bond: int | None = None

    def __post_init__(self):
        tensors = tuple(np.asarray(t, dtype=complex) for t in self.tensors)
        if not tensors:
            raise DomainError("an MPS needs at least one site")
        for k, t in enumerate(tensors):
            if t.ndim != 3 or t.shape[1] != 2:
                raise DomainError(f"site {k} has shape {t.shape}, expected (chi, 2, chi')")
            if k and tensors[k - 1].shape[2] != t.shape[0]:
                raise DomainError(f"bond mismatch between sites {k - 1} and {k}")
        if tensors[0].shape[0] != 1 or tensors[-1].shape[2] != 1:
            raise DomainError("boundary bond dimensions must be 1")
        if self.max_bond is not None and self.max_bond < 1:
            raise DomainError("max_bond must be >= 1")
        for t in tensors:
            t.setflags(write=False)
        object.__setattr__(self, "tensors", tensors)

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    def bond_dims(self) -> tuple:
        """Interior bond dimensions ``(chi_1, ..., chi_{L-1})``."""
        return tuple(t.shape[2] for t in self.tensors[:-1])

    def norm(self) -> float:
        env = np.ones((1, 1), dtype=complex)
        for t in self.tensors:
            env = np.einsum("ab,asc,bsd->cd", env, t.conj(), t)
        return float(np.sqrt(abs(env[0, 0])))


def product_mps(factors: Sequence[StateVector]) -> MpsState:
    """Bond-dimension-1 MPS of single-qubit states in wire order."""
    factors = list(factors)
    if not factors:
        raise DomainError("product_mps needs at least one factor")
    tensors = []
    for f in factors:
        if f.n_qubits != 1:
            raise DomainError("product_mps factors must be single-qubit states")
        tensors.append(np.asarray(f.amps).reshape(1, 2, 1))
    return MpsState(tuple(tensors))


def _split(theta: np.ndarray, max_bond: int | None):
    """SVD a (left, right) matrix; returns U, S*Vh, and whether anything was cut."""
    u, s, vh = np.linalg.svd(theta, full_matrices=False)
    keep = int(np.sum(s > SVD_CUTOFF * s[0])) if s.size and s[0] > 0 else 1
    keep = max(keep, 1)
    truncated = False
    if max_bond is not None and keep > max_bond:
        keep = max_bond
        truncated = True
    u, s, vh = u[:, :keep], s[:keep], vh[:keep]
    if truncated:
        s = s / np.linalg.norm(s)
    return u, s[:, None] * vh, truncated


def from_statevector(state: StateVector, max_bond: int | None = None) -> MpsState:
    """Left-to-right SVD decomposition of a dense state.

    Singular values below ``1e-12 * sigma_max`` are dropped; when ``max_bond``
    cuts further, the kept values are renormalized so the result stays a
    unit vector.
    """
    if max_bond is not None and max_bond < 1:
        raise DomainError("max_bond must be >= 1")
    n = state.n_qubits
    rest = np.asarray(state.amps).reshape(1, -1)
    tensors = []
    chi = 1
    for _ in range(n - 1):
        rest = rest.reshape(chi * 2, -1)
        u, rest, _cut = _split(rest, max_bond)
        new_chi = u.shape[1]
        tensors.append(u.reshape(chi, 2, new_chi))
        chi = new_chi
    last = rest.reshape(chi, 2, 1)
    last = last / np.linalg.norm(last)
    tensors.append(last)
    return MpsState(tuple(tensors), max_bond)


def to_statevector(state: MpsState) -> StateVector:
    """Contract the full chain into a dense vector."""
    if state.n_sites > MAX_QUBITS:
        raise ResourceError(f"{state.n_sites} sites exceed the dense limit of {MAX_QUBITS}")
    psi = state.tensors[0]
    for t in state.tensors[1:]:
        psi = np.tensordot(psi, t, axes=([-1], [0]))
    amps = psi.reshape(-1)
    return StateVector(state.n_sites, amps)


def amplitude(state: MpsState, bits) -> complex:
    """Amplitude of the basis state ``bits`` (string like ``"0110"`` or int sequence)."""
    if isinstance(bits, str):
        bits = [int(b) for b in bits]
    bits = list(bits)
    if len(bits) != state.n_sites:
        raise DomainError(f"expected {state.n_sites} bits, got {len(bits)}")
    if any(b not in (0, 1) for b in bits):
        raise DomainError("bits must be 0 or 1")
    mat = np.ones((1, 1), dtype=complex)
    for t, b in zip(state.tensors, bits):
        mat = mat @ t[:, b, :]
    return complex(mat[0, 0])


def apply_gate_mps(state: MpsState, gate: Gate, max_bond: int | None = None) -> MpsState:
    """Apply a one-qubit gate or a two-qubit gate on adjacent sites.

    ``max_bond`` defaults to the cap stored on ``state``.
    """
    if max_bond is None:
        max_bond = state.max_bond
    if any(w >= state.n_sites for w in gate.wires):
        raise DomainError(f"gate wires {gate.wires} invalid for {state.n_sites} sites")
    tensors = list(state.tensors)
    u = gate.unitary()
    if len(gate.wires) == 1:
        (w,) = gate.wires
        tensors[w] = np.einsum("st,atb->asb", u, tensors[w])
        return MpsState(tuple(tensors), max_bond)

    a, b = gate.wires
    if abs(a - b) != 1:
        raise UnsupportedTopologyError(f"two-qubit gate on non-adjacent wires {gate.wires}")
    u4 = u.reshape(2, 2, 2, 2)
    if a > b:
        # matrix is written with wire a most significant; swap to site order
        u4 = u4.transpose(1, 0, 3, 2)
        a, b = b, a
    left, right = tensors[a], tensors[b]
    chi_l, chi_r = left.shape[0], right.shape[2]
    two = np.einsum("asb,btc->astc", left, right)
    two = np.einsum("stuv,auvc->astc", u4, two)
    mat = two.reshape(chi_l * 2, 2 * chi_r)
    uu, rest, truncated = _split(mat, max_bond)
    k = uu.shape[1]
    tensors[a] = uu.reshape(chi_l, 2, k)
    tensors[b] = rest.reshape(k, 2, chi_r)
    out = MpsState(tuple(tensors), max_bond)
    if truncated:
        norm = out.norm()
        tensors[b] = tensors[b] / norm
        out = MpsState(tuple(tensors), max_bond)
    return out


def expectation_z_mps(state: MpsState, wire: int) -> float:
    """<Z> on ``wire`` by transfer-matrix contraction, normalized by <psi|psi>."""
    if not 0 <= wire < state.n_sites:
        raise DomainError(f"wire {wire} invalid for {state.n_sites} sites")
    num = np.ones((1, 1), dtype=complex)
    den = np.ones((1, 1), dtype=complex)
    for k, t in enumerate(state.tensors):
        den = np.einsum("ab,asc,bsd->cd", den, t.conj(), t)
        if k == wire:
            num = np.einsum("ab,asc,s,bsd->cd", num, t.conj(), _Z, t)
        else:
            num = np.einsum("ab,asc,bsd->cd", num, t.conj(), t)
    z = float((num[0, 0] / den[0, 0]).real)
    return min(1.0, max(-1.0, z))
