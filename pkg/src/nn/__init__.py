from src.nn.base import GradientSet, ParameterizedModel
from src.nn.dense import DenseLayer, DenseNet
from src.nn.errors import CheckpointError, GradientCheckError, NetworkError, ShapeError, StaleCacheError
from src.nn.gradcheck import finite_diff_check
from src.nn.lstm import LstmNet
from src.nn.optim import OptimizerState, RMSProp, clip_gradients, global_norm, rmsprop_step

__all__ = [
    "GradientSet",
    "ParameterizedModel",
    "DenseLayer",
    "DenseNet",
    "LstmNet",
    "OptimizerState",
    "RMSProp",
    "clip_gradients",
    "global_norm",
    "rmsprop_step",
    "finite_diff_check",
    "NetworkError",
    "ShapeError",
    "StaleCacheError",
    "GradientCheckError",
    "CheckpointError",
]
