"""Feature normalization and angle encoding of classical rows into product states."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError
from .simcore import StateVector, product_state

#: Factor applied to normalized angles before the cos/sin qubit map in the
#: training pipeline. The map ``x -> cos(x)|0> + sin(x)|1>`` sends ``x`` and
#: ``x + pi`` to the same ray, so angles spanning [-pi, pi] alias the feature
#: minimum, midpoint and maximum onto one state. A quarter keeps the encoded
#: span at pi/2: injective, with the two extremes mapped to orthogonal states.
DEFAULT_ANGLE_SCALE = 0.25


@dataclass(frozen=True)
class NormalizationBounds:
    """Per-feature min/max, learned on the training split."""

    minimum: tuple
    maximum: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.minimum)
        hi = tuple(float(v) for v in self.maximum)
        if len(lo) != len(hi):
            raise DomainError("minimum and maximum have different lengths")
        if any(a > b for a, b in zip(lo, hi)):
            raise DomainError("minimum exceeds maximum for some feature")
        object.__setattr__(self, "minimum", lo)
        object.__setattr__(self, "maximum", hi)

    @property
    def n_features(self) -> int:
        return len(self.minimum)

    @property
    def constant_features(self) -> tuple:
        """Indices of features whose training range is a single value."""
        return tuple(i for i, (a, b) in enumerate(zip(self.minimum, self.maximum)) if a == b)

    def to_dict(self) -> dict:
        return {"min": list(self.minimum), "max": list(self.maximum)}

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationBounds":
        return cls(tuple(d["min"]), tuple(d["max"]))


@dataclass(frozen=True)
class EncodedSample:
    """Normalized angles in [-pi, pi] and a binary label."""

    angles: np.ndarray
    label: int

    def __post_init__(self):
        angles = np.array(self.angles, dtype=float)
        if angles.ndim != 1 or angles.size == 0:
            raise DomainError("angles must be a non-empty vector")
        if np.any(np.abs(angles) > np.pi):
            raise DomainError("angles must lie in [-pi, pi]")
        if self.label not in (0, 1):
            raise DomainError(f"label must be 0 or 1, got {self.label!r}")
        angles.setflags(write=False)
        object.__setattr__(self, "angles", angles)


def fit_bounds(rows) -> NormalizationBounds:
    """Column-wise min and max of a feature matrix."""
    x = np.asarray(rows, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] == 0 or x.shape[1] == 0:
        raise DomainError("fit_bounds needs at least one row and one column")
    if not np.all(np.isfinite(x)):
        raise DomainError("feature matrix contains missing or non-finite values")
    return NormalizationBounds(tuple(x.min(axis=0)), tuple(x.max(axis=0)))


def normalize(row, bounds: NormalizationBounds) -> np.ndarray:
    """Map each feature linearly onto [-pi, pi], clamping unseen values.

    Features that were constant in training map to 0.
    """
    v = np.asarray(row, dtype=float)
    if v.shape != (bounds.n_features,):
        raise DomainError(f"row has {v.size} features, bounds have {bounds.n_features}")
    lo = np.asarray(bounds.minimum)
    hi = np.asarray(bounds.maximum)
    span = hi - lo
    out = np.zeros_like(v)
    ok = span > 0
    out[ok] = -np.pi + 2.0 * np.pi * (v[ok] - lo[ok]) / span[ok]
    return np.clip(out, -np.pi, np.pi)


def normalize_rows(rows, bounds: NormalizationBounds) -> np.ndarray:
    x = np.atleast_2d(np.asarray(rows, dtype=float))
    return np.stack([normalize(r, bounds) for r in x]) if len(x) else np.empty((0, bounds.n_features))


def encode_feature(x: float) -> StateVector:
    """cos(x)|0> + sin(x)|1>."""
    if not np.isfinite(x):
        raise DomainError("angle must be finite")
    return StateVector(1, np.array([np.cos(x), np.sin(x)]))


def encode_sample(angles: Sequence[float], scale: float = 1.0) -> StateVector:
    """Product state of per-feature encodings of ``scale * angles``."""
    a = np.asarray(angles, dtype=float).ravel()
    if a.size == 0:
        raise DomainError("encode_sample needs at least one angle")
    return product_state([encode_feature(scale * x) for x in a])
