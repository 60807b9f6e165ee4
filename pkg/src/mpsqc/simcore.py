"""Dense statevector simulation of few-qubit circuits.

Bit ordering: qubit 0 is the most significant bit of the basis index, so a
state of ``n`` qubits reshaped to ``(2,) * n`` has qubit ``w`` on axis ``w``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, ValidationError

MAX_QUBITS = 24
UNITARY_ATOL = 1e-10
NORM_ATOL = 1e-10

_CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def ry_matrix(angle: float) -> np.ndarray:
    """RY(angle) = exp(-i angle Y / 2)."""
    c, s = np.cos(angle / 2.0), np.sin(angle / 2.0)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StateVector:
    """Normalized amplitude vector over ``n_qubits`` qubits."""

    n_qubits: int
    amps: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise DomainError(f"n_qubits must be in [1, {MAX_QUBITS}], got {self.n_qubits}")
        amps = _frozen(np.ravel(self.amps))
        if amps.shape != (2**self.n_qubits,):
            raise DomainError(
                f"expected {2**self.n_qubits} amplitudes for {self.n_qubits} qubits, got {amps.size}"
            )
        if abs(np.vdot(amps, amps).real - 1.0) > NORM_ATOL:
            raise DomainError("state is not normalized")
        object.__setattr__(self, "amps", amps)

    @classmethod
    def from_amplitudes(cls, amps, normalize: bool = False) -> "StateVector":
        amps = np.asarray(amps, dtype=complex).ravel()
        n = int(round(np.log2(amps.size))) if amps.size else 0
        if amps.size == 0 or 2**n != amps.size:
            raise DomainError(f"amplitude count {amps.size} is not a power of two")
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise DomainError("cannot normalize the zero vector")
            amps = amps / norm
        return cls(n, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per qubit."""
        return self.amps.reshape((2,) * self.n_qubits)


@dataclass(frozen=True)
class Gate:
    """A gate and the ordered wires it acts on.

    ``kind`` is one of ``"RY"``, ``"CNOT"``, ``"GENERIC1Q"``, ``"GENERIC2Q"``.
    For CNOT the wires are ``(control, target)``.
    """

    kind: str
    wires: tuple
    angle: float | None = None
    matrix: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        wires = tuple(int(w) for w in self.wires)
        object.__setattr__(self, "wires", wires)
        arity = {"RY": 1, "CNOT": 2, "GENERIC1Q": 1, "GENERIC2Q": 2}.get(self.kind)
        if arity is None:
            raise ValidationError(f"unknown gate kind {self.kind!r}")
        if len(wires) != arity:
            raise DomainError(f"{self.kind} acts on {arity} wire(s), got {wires}")
        if len(set(wires)) != len(wires):
            raise DomainError(f"wire collision in {wires}")
        if any(w < 0 for w in wires):
            raise DomainError(f"negative wire index in {wires}")
        if self.kind == "RY":
            if self.angle is None or not np.isfinite(self.angle):
                raise DomainError("RY needs a finite angle")
        elif self.kind.startswith("GENERIC"):
            if self.matrix is None:
                raise ValidationError(f"{self.kind} needs a matrix")
            m = np.asarray(self.matrix, dtype=complex)
            dim = 2**arity
            if m.shape != (dim, dim):
                raise ValidationError(f"{self.kind} matrix must be {dim}x{dim}, got {m.shape}")
            if not np.allclose(m.conj().T @ m, np.eye(dim), atol=UNITARY_ATOL, rtol=0):
                raise ValidationError(f"{self.kind} matrix is not unitary")
            object.__setattr__(self, "matrix", _frozen(m))

    @classmethod
    def ry(cls, wire: int, angle: float) -> "Gate":
        return cls("RY", (wire,), angle=float(angle))

    @classmethod
    def cnot(cls, control: int, target: int) -> "Gate":
        return cls("CNOT", (control, target))

    @classmethod
    def generic(cls, matrix, wires: Sequence[int]) -> "Gate":
        wires = tuple(wires)
        kind = "GENERIC1Q" if len(wires) == 1 else "GENERIC2Q"
        return cls(kind, wires, matrix=matrix)

    def unitary(self) -> np.ndarray:
        """The gate matrix in the basis of ``wires`` (first wire most significant)."""
        if self.kind == "RY":
            return ry_matrix(self.angle)
        if self.kind == "CNOT":
            return _CNOT
        return self.matrix


def init_basis_state(n_qubits: int, basis_index: int) -> StateVector:
    """Computational basis state ``|basis_index>`` on ``n_qubits`` qubits."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise DomainError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    if not 0 <= basis_index < 2**n_qubits:
        raise DomainError(f"basis index {basis_index} out of range for {n_qubits} qubits")
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[basis_index] = 1.0
    return StateVector(n_qubits, amps)


def apply_matrix(psi: np.ndarray, u: np.ndarray, wires: Sequence[int]) -> np.ndarray:
    """Apply ``u`` to the given axes of a ``(2,)*n`` tensor ``psi``; returns a new tensor."""
    k = len(wires)
    u = u.reshape((2,) * (2 * k))
    out = np.tensordot(u, psi, axes=(list(range(k, 2 * k)), list(wires)))
    return np.moveaxis(out, list(range(k)), list(wires))


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Return ``U_gate |state>`` with identity on untouched wires."""
    if any(w >= state.n_qubits for w in gate.wires):
        raise DomainError(f"gate wires {gate.wires} invalid for {state.n_qubits} qubits")
    out = apply_matrix(state.tensor(), gate.unitary(), gate.wires)
    return StateVector(state.n_qubits, out.reshape(-1))


def apply_circuit(state: StateVector, gates: Sequence[Gate]) -> StateVector:
    for g in gates:
        state = apply_gate(state, g)
    return state


def kron(*states: StateVector) -> StateVector:
    """Tensor product of states, first argument on the lowest wires."""
    if not states:
        raise DomainError("kron needs at least one state")
    amps = states[0].amps
    for s in states[1:]:
        amps = np.kron(amps, s.amps)
    return StateVector(sum(s.n_qubits for s in states), amps)


def product_state(factors: Sequence[StateVector]) -> StateVector:
    """Kronecker product of single-qubit states in wire order."""
    factors = list(factors)
    if not factors:
        raise DomainError("product_state needs at least one factor")
    for i, f in enumerate(factors):
        if f.n_qubits != 1:
            raise DomainError(f"factor {i} has {f.n_qubits} qubits, expected 1")
        if abs(f.norm() - 1.0) > 1e-12:
            raise DomainError(f"factor {i} is not normalized")
    return kron(*factors)


def probability_one(state: StateVector, wire: int) -> float:
    """Probability of reading ``1`` on ``wire``."""
    if not 0 <= wire < state.n_qubits:
        raise DomainError(f"wire {wire} invalid for {state.n_qubits} qubits")
    probs = np.abs(np.moveaxis(state.tensor(), wire, 0)) ** 2
    return float(probs[1].sum())


def expectation_z(state: StateVector, wire: int) -> float:
    """<Z> on ``wire``: +1 weight where the wire's bit is 0, -1 where it is 1."""
    if not 0 <= wire < state.n_qubits:
        raise DomainError(f"wire {wire} invalid for {state.n_qubits} qubits")
    probs = np.abs(np.moveaxis(state.tensor(), wire, 0)) ** 2
    z = float(probs[0].sum() - probs[1].sum())
    return min(1.0, max(-1.0, z))
