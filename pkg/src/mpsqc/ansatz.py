"""The staircase MPS classifier circuit.

Wires are ``[ancilla?, data_1, ..., data_N]``. Block ``i`` acts on wires
``(i, i + 1)``: RY(theta[2i]) on wire i, RY(theta[2i+1]) on wire i+1, then
CNOT with control i and target i+1. Wire i is never touched again after
block i, and the last wire is read out. The score is the probability of
reading 1 there, ``m = (1 - <Z>) / 2``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .encoding import DEFAULT_ANGLE_SCALE, NormalizationBounds, encode_feature, encode_sample, normalize
from .errors import DomainError, ValidationError
from .mps import MpsState, apply_gate_mps, expectation_z_mps, from_statevector, product_mps
from .simcore import MAX_QUBITS, Gate, StateVector, apply_gate, expectation_z, init_basis_state, kron

BACKENDS = ("dense", "mps")
MODEL_FORMAT = "mpsqc-model/1"


@dataclass(frozen=True)
class StaircaseCircuit:
    n_data: int
    use_ancilla: bool = True
    angle_scale: float = DEFAULT_ANGLE_SCALE

    @property
    def n_wires(self) -> int:
        return self.n_data + (1 if self.use_ancilla else 0)

    @property
    def blocks(self) -> tuple:
        return tuple((i, i + 1) for i in range(self.n_wires - 1))

    @property
    def n_params(self) -> int:
        return 2 * len(self.blocks)

    @property
    def output_wire(self) -> int:
        return self.n_wires - 1

    def gates(self, theta) -> list:
        """Gate sequence for parameters ``theta`` in application order."""
        theta = self.check_theta(theta)
        out = []
        for i, (lo, hi) in enumerate(self.blocks):
            out += [Gate.ry(lo, theta[2 * i]), Gate.ry(hi, theta[2 * i + 1]), Gate.cnot(lo, hi)]
        return out

    def check_theta(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float).ravel()
        if theta.size != self.n_params:
            raise DomainError(f"theta has {theta.size} entries, circuit needs {self.n_params}")
        return theta

    def to_dict(self) -> dict:
        return {"n_data": self.n_data, "use_ancilla": self.use_ancilla, "angle_scale": self.angle_scale}


def build_circuit(n_data: int, use_ancilla: bool = True,
                  angle_scale: float = DEFAULT_ANGLE_SCALE) -> StaircaseCircuit:
    if not 1 <= n_data <= MAX_QUBITS - 1:
        raise DomainError(f"n_data must be in [1, {MAX_QUBITS - 1}], got {n_data}")
    if not (np.isfinite(angle_scale) and angle_scale > 0):
        raise DomainError("angle_scale must be positive and finite")
    return StaircaseCircuit(int(n_data), bool(use_ancilla), float(angle_scale))


def _with_ancilla(circuit: StaircaseCircuit, state: StateVector) -> StateVector:
    if state.n_qubits != circuit.n_data:
        raise DomainError(f"input has {state.n_qubits} qubits, circuit expects {circuit.n_data}")
    if circuit.use_ancilla:
        return kron(init_basis_state(1, 0), state)
    return state


def run_dense(circuit: StaircaseCircuit, theta, state: StateVector) -> StateVector:
    """Full output state of the circuit (ancilla prepended when configured)."""
    psi = _with_ancilla(circuit, state)
    for g in circuit.gates(theta):
        psi = apply_gate(psi, g)
    return psi


def run_mps(circuit: StaircaseCircuit, theta, state, max_bond: int | None = None) -> MpsState:
    """Circuit output as an MPS; ``state`` may be a StateVector or an MpsState."""
    if isinstance(state, StateVector):
        if state.n_qubits != circuit.n_data:
            raise DomainError(f"input has {state.n_qubits} qubits, circuit expects {circuit.n_data}")
        mps = from_statevector(state)
    else:
        if state.n_sites != circuit.n_data:
            raise DomainError(f"input has {state.n_sites} sites, circuit expects {circuit.n_data}")
        mps = state
    if circuit.use_ancilla:
        anc = np.array([1.0, 0.0], dtype=complex).reshape(1, 2, 1)
        mps = MpsState((anc,) + mps.tensors)
    for g in circuit.gates(theta):
        mps = apply_gate_mps(mps, g, max_bond)
    return mps


def evaluate(circuit: StaircaseCircuit, theta, state, backend: str = "dense") -> float:
    """Score ``m`` in [0, 1] for an encoded input state."""
    if backend == "dense":
        z = expectation_z(run_dense(circuit, theta, state), circuit.output_wire)
    elif backend == "mps":
        z = expectation_z_mps(run_mps(circuit, theta, state), circuit.output_wire)
    else:
        raise DomainError(f"unknown backend {backend!r}")
    return min(1.0, max(0.0, 0.5 * (1.0 - z)))


def encode_angles(circuit: StaircaseCircuit, angles) -> StateVector:
    return encode_sample(angles, scale=circuit.angle_scale)


def batch_scores(circuit: StaircaseCircuit, theta, angles, backend: str = "dense") -> np.ndarray:
    """Scores for a batch of normalized angle rows, in row order.

    The dense backend runs the compiled kernel (or its NumPy fallback) on
    real amplitudes; the MPS backend evaluates sample by sample.
    """
    theta = circuit.check_theta(theta)
    angles = np.atleast_2d(np.asarray(angles, dtype=float))
    if angles.shape[1] != circuit.n_data:
        raise DomainError(f"rows have {angles.shape[1]} features, circuit expects {circuit.n_data}")
    if backend == "dense":
        m = kernels.staircase_scores(theta, np.ascontiguousarray(angles * circuit.angle_scale),
                                     circuit.use_ancilla)
        return np.clip(m, 0.0, 1.0)
    if backend == "mps":
        out = np.empty(len(angles))
        for i, row in enumerate(angles):
            mps = product_mps([encode_feature(circuit.angle_scale * a) for a in row])
            out[i] = evaluate(circuit, theta, mps, backend="mps")
        return out
    raise DomainError(f"unknown backend {backend!r}")


@dataclass
class TrainedModel:
    circuit: StaircaseCircuit
    theta: np.ndarray
    bounds: NormalizationBounds
    class_mapping: dict = field(default_factory=dict)
    history: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.theta = self.circuit.check_theta(self.theta)
        if not np.all(np.isfinite(self.theta)):
            raise ValidationError("theta must be finite")
        if self.bounds.n_features != self.circuit.n_data:
            raise ValidationError("bounds and circuit disagree on the feature count")

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "circuit": self.circuit.to_dict(),
            "theta": [float(t) for t in self.theta],
            "bounds": self.bounds.to_dict(),
            "class_mapping": {str(k): v for k, v in self.class_mapping.items()},
            "history": [float(h) for h in self.history],
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedModel":
        if d.get("format") != MODEL_FORMAT:
            raise ValidationError(f"unsupported model format {d.get('format')!r}")
        try:
            c = d["circuit"]
            circuit = build_circuit(int(c["n_data"]), bool(c["use_ancilla"]), float(c["angle_scale"]))
            return cls(
                circuit=circuit,
                theta=np.array(d["theta"], dtype=float),
                bounds=NormalizationBounds.from_dict(d["bounds"]),
                class_mapping=dict(d.get("class_mapping", {})),
                history=list(d.get("history", [])),
                metadata=dict(d.get("metadata", {})),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed model file: {exc}") from exc

    def dumps(self) -> str:
        # json writes floats with repr(), which round-trips exactly
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text: str) -> "TrainedModel":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"model file is not valid JSON: {exc}") from exc


def predict(model: TrainedModel, raw_row: Sequence[float], backend: str = "dense"):
    """``(label, score)`` for one raw feature row; label is 1 iff score >= 0.5."""
    row = np.asarray(raw_row, dtype=float)
    if row.shape != (model.circuit.n_data,):
        raise DomainError(f"row has {row.size} features, model expects {model.circuit.n_data}")
    angles = normalize(row, model.bounds)
    m = evaluate(model.circuit, model.theta, encode_angles(model.circuit, angles), backend)
    return label_of(m), m


def label_of(m: float) -> int:
    return 1 if m >= 0.5 else 0
