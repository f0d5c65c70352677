"""RMSProp 优化器与全局范数梯度裁剪"""

import logging
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from src.nn.base import GradientSet, ParameterizedModel
from src.nn.errors import ShapeError

logger = logging.getLogger(__name__)


@dataclass
class OptimizerState:
    """每个参数一个平方梯度累积量"""
    accumulators: Dict[str, np.ndarray] = field(default_factory=dict)
    decay: float = 0.9
    epsilon: float = 1e-8
    learning_rate: float = 1e-3

    def __post_init__(self):
        if not 0.0 < self.decay < 1.0:
            raise ValueError(f"decay must be in (0,1), got {self.decay}")
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.learning_rate < 0.0:
            raise ValueError(f"learning rate must be >= 0, got {self.learning_rate}")


def global_norm(grads: GradientSet) -> float:
    total = 0.0
    for g in grads.values():
        total += float(np.sum(g * g))
    return float(np.sqrt(total))


def clip_gradients(grads: GradientSet, max_norm: float) -> GradientSet:
    """按所有参数梯度拼接后的 L2 范数整体缩放"""
    if max_norm <= 0.0:
        raise ValueError(f"max_norm must be > 0, got {max_norm}")
    norm = global_norm(grads)
    if norm <= max_norm:
        return {name: g.copy() for name, g in grads.items()}
    scale = max_norm / norm
    return {name: g * scale for name, g in grads.items()}


def rmsprop_step(
    params: Dict[str, np.ndarray],
    grads: GradientSet,
    state: OptimizerState,
) -> Dict[str, np.ndarray]:
    """原地更新参数与累积量，返回 params"""
    for name, param in params.items():
        if name not in grads:
            raise ShapeError(f"missing gradient for parameter {name}")
        g = grads[name]
        if g.shape != param.shape:
            raise ShapeError(f"{name}: gradient shape {g.shape} != parameter shape {param.shape}")
        acc = state.accumulators.get(name)
        if acc is None:
            acc = np.zeros_like(param)
            state.accumulators[name] = acc
        acc *= state.decay
        acc += (1.0 - state.decay) * g * g
        if state.learning_rate == 0.0:
            continue
        param -= state.learning_rate * g / (np.sqrt(acc) + state.epsilon)
    return params


class RMSProp:
    """绑定到单个网络的优化器：先裁剪再更新"""

    def __init__(
        self,
        model: ParameterizedModel,
        learning_rate: float = 1e-3,
        decay: float = 0.9,
        epsilon: float = 1e-8,
        max_grad_norm: float = 1.0,
    ):
        self.model = model
        self.max_grad_norm = max_grad_norm
        self.state = OptimizerState(decay=decay, epsilon=epsilon, learning_rate=learning_rate)

    def step(self, grads: GradientSet) -> float:
        """返回裁剪后的全局梯度范数"""
        clipped = clip_gradients(grads, self.max_grad_norm)
        rmsprop_step(self.model.parameters(), clipped, self.state)
        self.model.mark_updated()
        norm = global_norm(clipped)
        logger.debug(f"RMSProp 更新完成，裁剪后梯度范数: {norm:.6f}")
        return norm
