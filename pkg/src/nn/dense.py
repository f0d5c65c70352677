"""全连接网络: 前向、反向传播与初始化"""

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from src.nn.activations import ACTIVATIONS, activate, activation_backward
from src.nn.base import GradientSet, ParameterizedModel
from src.nn.errors import ShapeError


@dataclass
class DenseLayer:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str = "identity"

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ShapeError(f"layer weight {self.weight.shape} incompatible with bias {self.bias.shape}")
        if self.activation not in ACTIVATIONS:
            raise ShapeError(f"unsupported activation: {self.activation}")

    @property
    def in_dim(self) -> int:
        return int(self.weight.shape[1])

    @property
    def out_dim(self) -> int:
        return int(self.weight.shape[0])

    @classmethod
    def initialized(cls, in_dim: int, out_dim: int, activation: str, rng: np.random.Generator) -> "DenseLayer":
        """权重 ~ U[-1/sqrt(fan_in), 1/sqrt(fan_in)]，偏置为 0"""
        bound = 1.0 / np.sqrt(in_dim)
        weight = rng.uniform(-bound, bound, size=(out_dim, in_dim))
        return cls(weight=weight, bias=np.zeros(out_dim), activation=activation)


def layer_forward(layer: DenseLayer, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """单层前向，x 形状 (batch, in)，返回 (预激活, 激活输出)"""
    if x.shape[-1] != layer.in_dim:
        raise ShapeError(f"input width {x.shape[-1]} does not match layer input {layer.in_dim}")
    z = x @ layer.weight.T + layer.bias
    return z, activate(layer.activation, z)


def layer_backward(
    layer: DenseLayer,
    x: np.ndarray,
    z: np.ndarray,
    a: np.ndarray,
    grad_a: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """单层反向，返回 (dW, db, dx)；批维度上求和（损失本身已按批平均）"""
    grad_z = activation_backward(layer.activation, z, a, grad_a)
    grad_w = grad_z.T @ x
    grad_b = grad_z.sum(axis=0)
    grad_x = grad_z @ layer.weight
    return grad_w, grad_b, grad_x


@dataclass
class DenseCache:
    owner_id: int
    version: int
    inputs: List[np.ndarray] = field(default_factory=list)
    preacts: List[np.ndarray] = field(default_factory=list)
    outputs: List[np.ndarray] = field(default_factory=list)
    squeezed: bool = False


class DenseNet(ParameterizedModel):
    """多层感知机，承载 Q 网络等结构"""

    def __init__(self, layers: Sequence[DenseLayer], name: str = "dense"):
        super().__init__()
        if not layers:
            raise ShapeError("DenseNet needs at least one layer")
        for idx in range(1, len(layers)):
            if layers[idx].in_dim != layers[idx - 1].out_dim:
                raise ShapeError(
                    f"layer {idx} expects input {layers[idx].in_dim}, previous layer outputs {layers[idx - 1].out_dim}"
                )
        for idx, layer in enumerate(layers[:-1]):
            if layer.activation == "softmax":
                raise ShapeError(f"softmax is only allowed on the final layer (found on layer {idx})")
        self.layers: List[DenseLayer] = list(layers)
        self.name = name

    @classmethod
    def build(
        cls,
        sizes: Sequence[int],
        activations: Sequence[str],
        rng: np.random.Generator,
        name: str = "dense",
    ) -> "DenseNet":
        if len(sizes) != len(activations) + 1:
            raise ShapeError("need one activation per layer")
        layers = [
            DenseLayer.initialized(sizes[i], sizes[i + 1], activations[i], rng)
            for i in range(len(activations))
        ]
        return cls(layers, name=name)

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    def parameters(self) -> Dict[str, np.ndarray]:
        params: Dict[str, np.ndarray] = {}
        for idx, layer in enumerate(self.layers):
            params[f"{self.name}.{idx}.weight"] = layer.weight
            params[f"{self.name}.{idx}.bias"] = layer.bias
        return params

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, DenseCache]:
        x = np.asarray(x, dtype=np.float64)
        squeezed = x.ndim == 1
        batch = np.atleast_2d(x)
        if batch.shape[1] != self.input_dim:
            raise ShapeError(f"{self.name}: input width {batch.shape[1]} != expected {self.input_dim}")

        cache = DenseCache(owner_id=id(self), version=self._version, squeezed=squeezed)
        current = batch
        for layer in self.layers:
            z, a = layer_forward(layer, current)
            cache.inputs.append(current)
            cache.preacts.append(z)
            cache.outputs.append(a)
            current = a
        return (current[0] if squeezed else current), cache

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache: DenseCache, output_grad: np.ndarray) -> Tuple[GradientSet, np.ndarray]:
        """返回 (参数梯度, 输入梯度)"""
        self._check_cache(cache.owner_id, cache.version)
        grad = np.atleast_2d(np.asarray(output_grad, dtype=np.float64))
        if grad.shape != cache.outputs[-1].shape:
            raise ShapeError(f"{self.name}: output grad shape {grad.shape} != output shape {cache.outputs[-1].shape}")

        grads: GradientSet = {}
        for idx in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[idx]
            grad_w, grad_b, grad = layer_backward(
                layer, cache.inputs[idx], cache.preacts[idx], cache.outputs[idx], grad
            )
            grads[f"{self.name}.{idx}.weight"] = grad_w
            grads[f"{self.name}.{idx}.bias"] = grad_b
        ordered = {name: grads[name] for name in self.parameters()}
        input_grad = grad[0] if cache.squeezed else grad
        return ordered, input_grad

    @classmethod
    def zeros(cls, sizes: Sequence[int], activations: Sequence[str], name: str = "dense") -> "DenseNet":
        layers = [
            DenseLayer(np.zeros((sizes[i + 1], sizes[i])), np.zeros(sizes[i + 1]), activations[i])
            for i in range(len(activations))
        ]
        return cls(layers, name=name)

