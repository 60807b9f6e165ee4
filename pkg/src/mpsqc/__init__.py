"""Matrix-product-state quantum classifier trained by exact circuit simulation."""
__version__ = "0.1.0"

from .ansatz import StaircaseCircuit, TrainedModel, batch_scores, build_circuit, evaluate, predict
from .encoding import NormalizationBounds, encode_feature, encode_sample, fit_bounds, normalize
from .kernels import IMPLEMENTATION as KERNEL_IMPLEMENTATION
from .metrics import EvalReport, build_report
from .training import TrainConfig, cost, gradient, train

__all__ = [
    "KERNEL_IMPLEMENTATION",
    "EvalReport",
    "NormalizationBounds",
    "StaircaseCircuit",
    "TrainConfig",
    "TrainedModel",
    "batch_scores",
    "build_circuit",
    "build_report",
    "cost",
    "encode_feature",
    "encode_sample",
    "evaluate",
    "fit_bounds",
    "gradient",
    "normalize",
    "predict",
    "train",
]
