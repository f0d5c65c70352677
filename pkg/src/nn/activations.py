"""激活函数的前向与反向计算

softmax 只按最后一维归一化；sigmoid 使用 scipy 的数值稳定实现。
"""

import numpy as np
from scipy.special import expit

from src.nn.errors import ShapeError

ACTIVATIONS = ("relu", "tanh", "sigmoid", "softmax", "identity")


def activate(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    if name == "sigmoid":
        return expit(z)
    if name == "softmax":
        shifted = z - np.max(z, axis=-1, keepdims=True)
        exp = np.exp(shifted)
        return exp / np.sum(exp, axis=-1, keepdims=True)
    if name == "identity":
        return z
    raise ShapeError(f"unsupported activation: {name}")


def activation_backward(name: str, z: np.ndarray, a: np.ndarray, grad_a: np.ndarray) -> np.ndarray:
    """把对激活输出的梯度转换为对预激活的梯度"""
    if name == "relu":
        return grad_a * (z > 0.0)
    if name == "tanh":
        return grad_a * (1.0 - a * a)
    if name == "sigmoid":
        return grad_a * a * (1.0 - a)
    if name == "softmax":
        # 雅可比-向量积: s * (g - <g, s>)
        return a * (grad_a - np.sum(grad_a * a, axis=-1, keepdims=True))
    if name == "identity":
        return grad_a
    raise ShapeError(f"unsupported activation: {name}")
