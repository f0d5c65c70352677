"""中心差分梯度检查"""

import logging
from typing import Any, Callable, Optional, Tuple

import numpy as np

from src.nn.base import GradientSet, ParameterizedModel
from src.nn.errors import GradientCheckError

logger = logging.getLogger(__name__)

# loss_fn(model, batch) -> (标量损失, 解析梯度)
LossFn = Callable[[ParameterizedModel, Any], Tuple[float, GradientSet]]


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(1e-8, abs(analytic) + abs(numeric))


def finite_diff_check(
    model: ParameterizedModel,
    batch: Any,
    loss_fn: LossFn,
    h: float = 1e-4,
    max_entries_per_param: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """返回解析梯度与数值梯度的最大相对误差

    max_entries_per_param 限制每个参数数组抽查的元素个数，None 表示全部检查。
    """
    params = model.parameters()
    if model.num_parameters() == 0:
        return 0.0

    loss, analytic = loss_fn(model, batch)
    if not np.isfinite(loss):
        raise GradientCheckError(f"loss is not finite: {loss}")

    rng = rng or np.random.default_rng(0)
    worst = 0.0
    for name, param in params.items():
        flat = param.reshape(-1)
        grad_flat = np.asarray(analytic[name]).reshape(-1)
        indices = np.arange(flat.size)
        if max_entries_per_param is not None and flat.size > max_entries_per_param:
            indices = rng.choice(flat.size, size=max_entries_per_param, replace=False)
        for idx in indices:
            original = flat[idx]
            flat[idx] = original + h
            model.mark_updated()
            loss_plus, _ = loss_fn(model, batch)
            flat[idx] = original - h
            model.mark_updated()
            loss_minus, _ = loss_fn(model, batch)
            flat[idx] = original
            model.mark_updated()
            if not (np.isfinite(loss_plus) and np.isfinite(loss_minus)):
                raise GradientCheckError(f"{name}[{idx}]: perturbed loss is not finite")
            numeric = (loss_plus - loss_minus) / (2.0 * h)
            worst = max(worst, relative_error(float(grad_flat[idx]), float(numeric)))
    logger.debug(f"梯度检查完成，最大相对误差: {worst:.3e}")
    return worst
