import copy
from abc import ABC, abstractmethod
from typing import Dict, Mapping

import numpy as np

from src.nn.errors import ShapeError, StaleCacheError

# 每个参数数组对应一个同形状梯度数组，键为参数名
GradientSet = Dict[str, np.ndarray]


class ParameterizedModel(ABC):
    """带命名参数的可训练模型基类

    parameters() 返回的是模型内部数组的引用，优化器与梯度检查会原地修改它们，
    修改后必须调用 mark_updated()，使旧的前向缓存失效。
    """

    def __init__(self):
        self._version = 0

    @abstractmethod
    def parameters(self) -> Dict[str, np.ndarray]:
        pass

    @property
    def version(self) -> int:
        return self._version

    def mark_updated(self) -> None:
        self._version += 1

    def num_parameters(self) -> int:
        return int(sum(arr.size for arr in self.parameters().values()))

    def zero_gradients(self) -> GradientSet:
        return {name: np.zeros_like(arr) for name, arr in self.parameters().items()}

    def copy(self) -> "ParameterizedModel":
        """深拷贝（值语义），拷贝后的模型与原模型不共享任何数组"""
        return copy.deepcopy(self)

    def load_parameters(self, values: Mapping[str, np.ndarray]) -> None:
        params = self.parameters()
        missing = sorted(set(params) - set(values))
        unknown = sorted(set(values) - set(params))
        if missing or unknown:
            raise ShapeError(f"parameter names mismatch: missing={missing} unknown={unknown}")
        for name, target in params.items():
            source = np.asarray(values[name], dtype=target.dtype)
            if source.shape != target.shape:
                raise ShapeError(f"{name}: expected shape {target.shape}, got {source.shape}")
            np.copyto(target, source)
        self.mark_updated()

    def _check_cache(self, owner_id: int, version: int) -> None:
        if owner_id != id(self) or version != self._version:
            raise StaleCacheError("cached intermediates do not come from this network's latest forward call")
