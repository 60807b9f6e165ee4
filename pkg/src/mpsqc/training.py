"""Fitting circuit parameters to the mean squared error between scores and labels."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import kernels
from .ansatz import StaircaseCircuit, TrainedModel, batch_scores
from .encoding import EncodedSample, NormalizationBounds
from .errors import DomainError, NumericalError, ValidationError

logger = logging.getLogger(__name__)

OPTIMIZERS = ("cg", "sgd")
GRADIENT_MODES = ("parameter-shift", "finite-difference")

ARMIJO_C = 1e-4
ARMIJO_SHRINK = 0.5
ARMIJO_INITIAL_STEP = 1.0
MAX_BACKTRACKS = 40


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "cg"
    max_iters: int = 200
    grad_tol: float = 1e-5
    learning_rate: float = 0.1
    batch_size: int = 16
    gradient_mode: str = "parameter-shift"
    fd_step: float = 1e-4
    seed: int = 0
    restarts: int = 3

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ValidationError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        if self.gradient_mode not in GRADIENT_MODES:
            raise ValidationError(f"gradient_mode must be one of {GRADIENT_MODES}")
        if int(self.max_iters) < 1:
            raise ValidationError("max_iters must be >= 1")
        if not self.grad_tol > 0:
            raise ValidationError("grad_tol must be > 0")
        if self.optimizer == "sgd" and not self.learning_rate > 0:
            raise ValidationError("learning_rate must be > 0")
        if int(self.batch_size) < 1:
            raise ValidationError("batch_size must be >= 1")
        if self.gradient_mode == "finite-difference" and not self.fd_step > 0:
            raise ValidationError("fd_step must be > 0")
        if int(self.restarts) < 1:
            raise ValidationError("restarts must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValidationError(f"unknown training options: {sorted(unknown)}")
        return cls(**d)


def _arrays(dataset) -> tuple:
    """Stack a sequence of EncodedSample (or an ``(angles, labels)`` pair) into arrays."""
    if isinstance(dataset, tuple) and len(dataset) == 2 and isinstance(dataset[0], np.ndarray):
        angles, labels = dataset
        angles = np.atleast_2d(np.asarray(angles, dtype=float))
        labels = np.asarray(labels, dtype=float)
    else:
        dataset = list(dataset)
        if dataset and not isinstance(dataset[0], EncodedSample):
            raise DomainError("dataset must contain EncodedSample items")
        angles = np.array([s.angles for s in dataset], dtype=float)
        labels = np.array([s.label for s in dataset], dtype=float)
    if len(labels) == 0:
        raise DomainError("dataset is empty")
    return angles, labels


def cost(circuit: StaircaseCircuit, theta, dataset, backend: str = "dense") -> float:
    """Mean of ``(m_d - y_d)**2`` over the dataset."""
    angles, labels = _arrays(dataset)
    m = batch_scores(circuit, theta, angles, backend)
    return float(np.mean((m - labels) ** 2))


def score_gradient(circuit: StaircaseCircuit, theta, angles, backend: str = "dense") -> np.ndarray:
    """d m_d / d theta_k for every sample, by the parameter-shift rule. Shape (D, P)."""
    theta = circuit.check_theta(theta)
    if backend == "dense":
        shifted = kernels.staircase_shift_scores(
            theta, np.ascontiguousarray(angles * circuit.angle_scale), circuit.use_ancilla
        )
        return 0.5 * (shifted[:, :, 0] - shifted[:, :, 1])
    out = np.empty((len(angles), circuit.n_params))
    for k in range(circuit.n_params):
        e = np.zeros(circuit.n_params)
        e[k] = np.pi / 2
        out[:, k] = 0.5 * (batch_scores(circuit, theta + e, angles, backend)
                           - batch_scores(circuit, theta - e, angles, backend))
    return out


def gradient(circuit: StaircaseCircuit, theta, dataset, mode: str = "parameter-shift",
             h: float = 1e-4, backend: str = "dense") -> np.ndarray:
    """Gradient of :func:`cost` with respect to ``theta``.

    ``mode="parameter-shift"`` is exact; ``mode="finite-difference"`` is the
    central difference with step ``h``.
    """
    theta = circuit.check_theta(theta)
    angles, labels = _arrays(dataset)
    if circuit.n_params == 0:
        return np.zeros(0)
    if mode == "parameter-shift":
        m = batch_scores(circuit, theta, angles, backend)
        dm = score_gradient(circuit, theta, angles, backend)
        return (2.0 / len(labels)) * ((m - labels) @ dm)
    if mode == "finite-difference":
        if not h > 0:
            raise DomainError("finite-difference step must be > 0")
        g = np.empty(circuit.n_params)
        for k in range(circuit.n_params):
            e = np.zeros(circuit.n_params)
            e[k] = h
            g[k] = (cost(circuit, theta + e, (angles, labels), backend)
                    - cost(circuit, theta - e, (angles, labels), backend)) / (2 * h)
        return g
    raise DomainError(f"unknown gradient mode {mode!r}")


class _Objective:
    """Cost and gradient on a fixed dataset with a finiteness guard."""

    def __init__(self, circuit, angles, labels, config, backend):
        self.circuit = circuit
        self.angles = angles
        self.labels = labels
        self.config = config
        self.backend = backend
        self.iteration = 0

    def cost(self, theta, idx=None) -> float:
        a, y = (self.angles, self.labels) if idx is None else (self.angles[idx], self.labels[idx])
        j = cost(self.circuit, theta, (a, y), self.backend)
        if not np.isfinite(j):
            raise NumericalError("non-finite cost", self.iteration)
        return j

    def grad(self, theta, idx=None) -> np.ndarray:
        a, y = (self.angles, self.labels) if idx is None else (self.angles[idx], self.labels[idx])
        g = gradient(self.circuit, theta, (a, y), self.config.gradient_mode,
                     self.config.fd_step, self.backend)
        if not np.all(np.isfinite(g)):
            raise NumericalError("non-finite gradient", self.iteration)
        return g


def _run_cg(obj: _Objective, theta: np.ndarray, config: TrainConfig):
    f = obj.cost(theta)
    g = obj.grad(theta)
    d = -g
    history = [f]
    for it in range(1, config.max_iters + 1):
        obj.iteration = it
        if np.max(np.abs(g), initial=0.0) < config.grad_tol:
            break
        slope = float(g @ d)
        steepest = False
        if slope >= 0:
            d, slope, steepest = -g, -float(g @ g), True
        while True:
            alpha = ARMIJO_INITIAL_STEP
            accepted = False
            for _ in range(MAX_BACKTRACKS):
                trial = theta + alpha * d
                ft = obj.cost(trial)
                if ft <= f + ARMIJO_C * alpha * slope:
                    accepted = True
                    break
                alpha *= ARMIJO_SHRINK
            if accepted or steepest:
                break
            d, slope, steepest = -g, -float(g @ g), True
        if not accepted:
            logger.debug("line search stalled at iteration %d", it)
            break
        g_new = obj.grad(trial)
        beta = max(0.0, float(g_new @ (g_new - g)) / float(g @ g))
        d = -g_new + beta * d
        theta, f, g = trial, ft, g_new
        history.append(f)
    return theta, f, history


def _run_sgd(obj: _Objective, theta: np.ndarray, config: TrainConfig, rng: np.random.Generator):
    n = len(obj.labels)
    f = obj.cost(theta)
    history = [f]
    best_theta, best_f = theta.copy(), f
    for epoch in range(1, config.max_iters + 1):
        obj.iteration = epoch
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            theta = theta - config.learning_rate * obj.grad(theta, idx)
        f = obj.cost(theta)
        history.append(f)
        if f < best_f:
            best_theta, best_f = theta.copy(), f
        if np.max(np.abs(obj.grad(theta)), initial=0.0) < config.grad_tol:
            break
    # epoch-end cost can rise under SGD; hand back the best parameters seen
    return best_theta, best_f, history


def train(circuit: StaircaseCircuit, dataset, config: TrainConfig | None = None, *,
          bounds: NormalizationBounds | None = None, class_mapping: dict | None = None,
          backend: str = "dense") -> TrainedModel:
    """Fit ``theta`` from ``config.restarts`` uniform starts; keep the lowest final cost.

    ``bounds`` are stored on the returned model; by default they are the
    identity range [-pi, pi] so the model consumes angles directly.
    """
    config = config or TrainConfig()
    angles, labels = _arrays(dataset)
    if angles.shape[1] != circuit.n_data:
        raise DomainError(f"samples have {angles.shape[1]} features, circuit expects {circuit.n_data}")
    if bounds is None:
        bounds = NormalizationBounds((-np.pi,) * circuit.n_data, (np.pi,) * circuit.n_data)
    rng = np.random.default_rng(config.seed)
    obj = _Objective(circuit, angles, labels, config, backend)
    best = None
    finals = []
    for r in range(config.restarts):
        theta0 = rng.uniform(-np.pi, np.pi, circuit.n_params)
        obj.iteration = 0
        if config.optimizer == "cg":
            theta, f, history = _run_cg(obj, theta0, config)
        else:
            theta, f, history = _run_sgd(obj, theta0, config, rng)
        finals.append(f)
        logger.info("restart %d: cost %.6f -> %.6f in %d steps", r, history[0], f, len(history) - 1)
        if best is None or f < best[1]:
            best = (theta, f, history, r)
    theta, f, history, r_best = best
    return TrainedModel(
        circuit=circuit,
        theta=theta,
        bounds=bounds,
        class_mapping=dict(class_mapping or {}),
        history=list(history),
        metadata={"train_config": config.to_dict(), "backend": backend,
                  "best_restart": r_best, "restart_costs": finals, "final_cost": f},
    )

