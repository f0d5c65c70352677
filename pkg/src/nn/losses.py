"""损失函数，均返回 (批平均损失, 对网络输出的梯度)"""

from typing import Tuple

import numpy as np

from src.nn.errors import ShapeError

PROB_CLIP = 1e-12


def mse_loss(pred: np.ndarray, target: np.ndarray) -> Tuple[float, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"mse: prediction shape {pred.shape} != target shape {target.shape}")
    if pred.size == 0:
        return 0.0, np.zeros_like(pred)
    diff = pred - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size


def bce_loss(prob: np.ndarray, target: np.ndarray) -> Tuple[float, np.ndarray]:
    """二元交叉熵，prob 为 sigmoid 输出"""
    prob = np.asarray(prob, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if prob.shape != target.shape:
        raise ShapeError(f"bce: prediction shape {prob.shape} != target shape {target.shape}")
    if prob.size == 0:
        return 0.0, np.zeros_like(prob)
    p = np.clip(prob, PROB_CLIP, 1.0 - PROB_CLIP)
    loss = -np.mean(target * np.log(p) + (1.0 - target) * np.log(1.0 - p))
    grad = (p - target) / (p * (1.0 - p)) / prob.size
    return float(loss), grad


def categorical_cross_entropy(probs: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray]:
    """probs 为 (N, C) 的 softmax 输出，targets 为类别下标"""
    probs = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    targets = np.asarray(targets, dtype=np.int64).reshape(-1)
    if targets.shape[0] != probs.shape[0]:
        raise ShapeError(f"cross entropy: {probs.shape[0]} rows but {targets.shape[0]} targets")
    n = probs.shape[0]
    if n == 0:
        return 0.0, np.zeros_like(probs)
    rows = np.arange(n)
    picked = np.clip(probs[rows, targets], PROB_CLIP, 1.0)
    grad = np.zeros_like(probs)
    grad[rows, targets] = -1.0 / (picked * n)
    return float(-np.mean(np.log(picked))), grad
