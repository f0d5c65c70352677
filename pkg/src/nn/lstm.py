"""单层 LSTM 序列打分网络

结构: 线性输入编码 -> LSTM 单元 -> 每个位置一个 sigmoid 分数。
门顺序固定为 input / forget / output / candidate，存放在同一个 (4H, ...) 矩阵里。
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from src.nn.base import GradientSet, ParameterizedModel
from src.nn.errors import ShapeError


@dataclass
class LstmCache:
    owner_id: int
    version: int
    inputs: List[np.ndarray] = field(default_factory=list)
    encoded: List[np.ndarray] = field(default_factory=list)
    gates: List[Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = field(default_factory=list)
    cells: List[np.ndarray] = field(default_factory=list)
    hiddens: List[np.ndarray] = field(default_factory=list)
    scores: Optional[np.ndarray] = None


class LstmNet(ParameterizedModel):
    def __init__(
        self,
        enc_w: np.ndarray,
        enc_b: np.ndarray,
        w_x: np.ndarray,
        w_h: np.ndarray,
        b: np.ndarray,
        out_w: np.ndarray,
        out_b: np.ndarray,
    ):
        super().__init__()
        self.enc_w = np.asarray(enc_w, dtype=np.float64)
        self.enc_b = np.asarray(enc_b, dtype=np.float64)
        self.w_x = np.asarray(w_x, dtype=np.float64)
        self.w_h = np.asarray(w_h, dtype=np.float64)
        self.b = np.asarray(b, dtype=np.float64)
        self.out_w = np.asarray(out_w, dtype=np.float64)
        self.out_b = np.asarray(out_b, dtype=np.float64).reshape(1)

        hidden = self.w_h.shape[1]
        encoder_dim = self.enc_w.shape[0]
        expected = {
            "enc_b": (encoder_dim,),
            "w_x": (4 * hidden, encoder_dim),
            "w_h": (4 * hidden, hidden),
            "b": (4 * hidden,),
            "out_w": (hidden,),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ShapeError(f"lstm.{name}: expected shape {shape}, got {getattr(self, name).shape}")

    @classmethod
    def build(
        cls,
        input_dim: int,
        encoder_dim: int = 80,
        hidden_size: int = 126,
        rng: Optional[np.random.Generator] = None,
        forget_bias: float = 1.0,
    ) -> "LstmNet":
        """rng 为 None 时所有权重与偏置置零"""
        H = hidden_size

        def uniform(shape, fan_in):
            if rng is None:
                return np.zeros(shape)
            bound = 1.0 / np.sqrt(fan_in)
            return rng.uniform(-bound, bound, size=shape)

        b = np.zeros(4 * H)
        if rng is not None:
            b[H:2 * H] = forget_bias
        return cls(
            enc_w=uniform((encoder_dim, input_dim), input_dim),
            enc_b=np.zeros(encoder_dim),
            w_x=uniform((4 * H, encoder_dim), encoder_dim),
            w_h=uniform((4 * H, H), H),
            b=b,
            out_w=uniform((H,), H),
            out_b=np.zeros(1),
        )

    @property
    def input_dim(self) -> int:
        return int(self.enc_w.shape[1])

    @property
    def hidden_size(self) -> int:
        return int(self.w_h.shape[1])

    def parameters(self) -> Dict[str, np.ndarray]:
        return {
            "lstm.enc_w": self.enc_w,
            "lstm.enc_b": self.enc_b,
            "lstm.w_x": self.w_x,
            "lstm.w_h": self.w_h,
            "lstm.b": self.b,
            "lstm.out_w": self.out_w,
            "lstm.out_b": self.out_b,
        }

    def forward(self, sequence: Sequence[np.ndarray]) -> Tuple[np.ndarray, LstmCache]:
        """逐位置打分，位置 t 的分数只依赖前 t 个元素"""
        H = self.hidden_size
        cache = LstmCache(owner_id=id(self), version=self._version)
        h = np.zeros(H)
        c = np.zeros(H)
        scores = np.zeros(len(sequence))
        for t, x in enumerate(sequence):
            x = np.asarray(x, dtype=np.float64)
            if x.shape != (self.input_dim,):
                raise ShapeError(f"lstm: element {t} has shape {x.shape}, expected ({self.input_dim},)")
            e = self.enc_w @ x + self.enc_b
            z = self.w_x @ e + self.w_h @ h + self.b
            i = expit(z[:H])
            f = expit(z[H:2 * H])
            o = expit(z[2 * H:3 * H])
            g = np.tanh(z[3 * H:])
            c = f * c + i * g
            h = o * np.tanh(c)
            scores[t] = expit(self.out_w @ h + self.out_b[0])

            cache.inputs.append(x)
            cache.encoded.append(e)
            cache.gates.append((i, f, o, g))
            cache.cells.append(c)
            cache.hiddens.append(h)
        cache.scores = scores
        return scores, cache

    def score(self, sequence: Sequence[np.ndarray]) -> np.ndarray:
        return self.forward(sequence)[0]

    def backward(self, cache: LstmCache, grad_scores: np.ndarray) -> GradientSet:
        """沿时间反向传播，grad_scores 为损失对每个位置分数的梯度"""
        self._check_cache(cache.owner_id, cache.version)
        grad_scores = np.asarray(grad_scores, dtype=np.float64)
        T = len(cache.hiddens)
        if grad_scores.shape != (T,):
            raise ShapeError(f"lstm: grad_scores shape {grad_scores.shape} != ({T},)")

        H = self.hidden_size
        grads = self.zero_gradients()
        dh_next = np.zeros(H)
        dc_next = np.zeros(H)
        for t in range(T - 1, -1, -1):
            i, f, o, g = cache.gates[t]
            c = cache.cells[t]
            h = cache.hiddens[t]
            c_prev = cache.cells[t - 1] if t > 0 else np.zeros(H)
            h_prev = cache.hiddens[t - 1] if t > 0 else np.zeros(H)
            s = cache.scores[t]

            dlogit = grad_scores[t] * s * (1.0 - s)
            grads["lstm.out_w"] += dlogit * h
            grads["lstm.out_b"] += dlogit

            dh = dlogit * self.out_w + dh_next
            tanh_c = np.tanh(c)
            do = dh * tanh_c
            dc = dh * o * (1.0 - tanh_c * tanh_c) + dc_next
            di = dc * g
            dg = dc * i
            df = dc * c_prev
            dc_next = dc * f

            dz = np.concatenate([
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                do * o * (1.0 - o),
                dg * (1.0 - g * g),
            ])
            grads["lstm.w_x"] += np.outer(dz, cache.encoded[t])
            grads["lstm.w_h"] += np.outer(dz, h_prev)
            grads["lstm.b"] += dz

            de = self.w_x.T @ dz
            grads["lstm.enc_w"] += np.outer(de, cache.inputs[t])
            grads["lstm.enc_b"] += de
            dh_next = self.w_h.T @ dz
        return grads
