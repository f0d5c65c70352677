"""多任务世界模型 M(s,a)

状态与动作各经过一个 80 维线性编码，拼接后进入 160 维 tanh 共享层，
再分出三个头：用户行为分布 (softmax)、归一化奖励 (tanh)、终止概率 (sigmoid)。
"""

from dataclasses import dataclass
from typing import Dict, NamedTuple, Optional, Tuple

import numpy as np

from src.nn.base import GradientSet, ParameterizedModel
from src.nn.dense import DenseLayer, layer_backward, layer_forward
from src.nn.errors import ShapeError

LAYER_NAMES = ("state_enc", "action_enc", "trunk", "user_head", "reward_head", "term_head")


class WorldOutput(NamedTuple):
    user_probs: np.ndarray
    reward: np.ndarray
    terminal: np.ndarray


@dataclass
class WorldCache:
    owner_id: int
    version: int
    states: np.ndarray
    actions_onehot: np.ndarray
    joint: np.ndarray
    trunk_z: np.ndarray
    trunk_a: np.ndarray
    head_z: Dict[str, np.ndarray]
    head_a: Dict[str, np.ndarray]
    squeezed: bool


class WorldModel(ParameterizedModel):
    def __init__(self, layers: Dict[str, DenseLayer]):
        super().__init__()
        missing = [name for name in LAYER_NAMES if name not in layers]
        if missing:
            raise ShapeError(f"world model is missing layers: {missing}")
        self.layers = {name: layers[name] for name in LAYER_NAMES}
        enc_width = self.layers["state_enc"].out_dim + self.layers["action_enc"].out_dim
        if self.layers["trunk"].in_dim != enc_width:
            raise ShapeError(f"trunk expects {self.layers['trunk'].in_dim} inputs, encoders give {enc_width}")
        for head in ("user_head", "reward_head", "term_head"):
            if self.layers[head].in_dim != self.layers["trunk"].out_dim:
                raise ShapeError(f"{head} input does not match trunk width")
        if self.layers["reward_head"].out_dim != 1 or self.layers["term_head"].out_dim != 1:
            raise ShapeError("reward and terminal heads must be scalar")

    @classmethod
    def create(
        cls,
        state_dim: int,
        n_actions: int,
        n_user_acts: int,
        encoder_size: int = 80,
        hidden_size: int = 160,
        rng: Optional[np.random.Generator] = None,
    ) -> "WorldModel":
        rng = rng or np.random.default_rng(0)
        return cls({
            "state_enc": DenseLayer.initialized(state_dim, encoder_size, "identity", rng),
            "action_enc": DenseLayer.initialized(n_actions, encoder_size, "identity", rng),
            "trunk": DenseLayer.initialized(2 * encoder_size, hidden_size, "tanh", rng),
            "user_head": DenseLayer.initialized(hidden_size, n_user_acts, "softmax", rng),
            "reward_head": DenseLayer.initialized(hidden_size, 1, "tanh", rng),
            "term_head": DenseLayer.initialized(hidden_size, 1, "sigmoid", rng),
        })

    @classmethod
    def zeros(cls, state_dim: int, n_actions: int, n_user_acts: int, encoder_size: int = 80, hidden_size: int = 160) -> "WorldModel":
        def zero(in_dim, out_dim, activation):
            return DenseLayer(np.zeros((out_dim, in_dim)), np.zeros(out_dim), activation)

        return cls({
            "state_enc": zero(state_dim, encoder_size, "identity"),
            "action_enc": zero(n_actions, encoder_size, "identity"),
            "trunk": zero(2 * encoder_size, hidden_size, "tanh"),
            "user_head": zero(hidden_size, n_user_acts, "softmax"),
            "reward_head": zero(hidden_size, 1, "tanh"),
            "term_head": zero(hidden_size, 1, "sigmoid"),
        })

    @classmethod
    def from_parameters(cls, params: Dict[str, np.ndarray]) -> "WorldModel":
        activations = {
            "state_enc": "identity",
            "action_enc": "identity",
            "trunk": "tanh",
            "user_head": "softmax",
            "reward_head": "tanh",
            "term_head": "sigmoid",
        }
        return cls({
            name: DenseLayer(np.array(params[f"world.{name}.weight"]), np.array(params[f"world.{name}.bias"]), act)
            for name, act in activations.items()
        })

    @property
    def state_dim(self) -> int:
        return self.layers["state_enc"].in_dim

    @property
    def n_actions(self) -> int:
        return self.layers["action_enc"].in_dim

    @property
    def n_user_acts(self) -> int:
        return self.layers["user_head"].out_dim

    def parameters(self) -> Dict[str, np.ndarray]:
        params: Dict[str, np.ndarray] = {}
        for name, layer in self.layers.items():
            params[f"world.{name}.weight"] = layer.weight
            params[f"world.{name}.bias"] = layer.bias
        return params

    def forward(self, states: np.ndarray, actions) -> Tuple[WorldOutput, WorldCache]:
        states = np.asarray(states, dtype=np.float64)
        squeezed = states.ndim == 1
        states = np.atleast_2d(states)
        actions = np.atleast_1d(np.asarray(actions, dtype=np.int64))
        if actions.shape[0] != states.shape[0]:
            raise ShapeError(f"{states.shape[0]} states but {actions.shape[0]} actions")
        if np.any(actions < 0) or np.any(actions >= self.n_actions):
            raise ShapeError(f"action index out of range [0,{self.n_actions})")
        onehot = np.zeros((actions.shape[0], self.n_actions))
        onehot[np.arange(actions.shape[0]), actions] = 1.0

        _, state_code = layer_forward(self.layers["state_enc"], states)
        _, action_code = layer_forward(self.layers["action_enc"], onehot)
        joint = np.concatenate([state_code, action_code], axis=1)
        trunk_z, trunk_a = layer_forward(self.layers["trunk"], joint)
        head_z, head_a = {}, {}
        for head in ("user_head", "reward_head", "term_head"):
            head_z[head], head_a[head] = layer_forward(self.layers[head], trunk_a)

        cache = WorldCache(
            owner_id=id(self),
            version=self._version,
            states=states,
            actions_onehot=onehot,
            joint=joint,
            trunk_z=trunk_z,
            trunk_a=trunk_a,
            head_z=head_z,
            head_a=head_a,
            squeezed=squeezed,
        )
        output = WorldOutput(head_a["user_head"], head_a["reward_head"][:, 0], head_a["term_head"][:, 0])
        if squeezed:
            output = WorldOutput(output.user_probs[0], output.reward[0], output.terminal[0])
        return output, cache

    def backward(
        self,
        cache: WorldCache,
        grad_probs: np.ndarray,
        grad_reward: np.ndarray,
        grad_terminal: np.ndarray,
    ) -> GradientSet:
        self._check_cache(cache.owner_id, cache.version)
        n = cache.states.shape[0]
        head_grads = {
            "user_head": np.asarray(grad_probs, dtype=np.float64).reshape(n, -1),
            "reward_head": np.asarray(grad_reward, dtype=np.float64).reshape(n, 1),
            "term_head": np.asarray(grad_terminal, dtype=np.float64).reshape(n, 1),
        }
        grads: GradientSet = {}
        grad_trunk = np.zeros_like(cache.trunk_a)
        for head, grad_a in head_grads.items():
            dw, db, dx = layer_backward(self.layers[head], cache.trunk_a, cache.head_z[head], cache.head_a[head], grad_a)
            grads[f"world.{head}.weight"] = dw
            grads[f"world.{head}.bias"] = db
            grad_trunk += dx

        dw, db, grad_joint = layer_backward(self.layers["trunk"], cache.joint, cache.trunk_z, cache.trunk_a, grad_trunk)
        grads["world.trunk.weight"] = dw
        grads["world.trunk.bias"] = db

        enc = self.layers["state_enc"].out_dim
        grad_state_code = grad_joint[:, :enc]
        grad_action_code = grad_joint[:, enc:]
        # 编码层为线性激活，预激活即输出
        state_code = cache.joint[:, :enc]
        action_code = cache.joint[:, enc:]
        dw, db, _ = layer_backward(self.layers["state_enc"], cache.states, state_code, state_code, grad_state_code)
        grads["world.state_enc.weight"] = dw
        grads["world.state_enc.bias"] = db
        dw, db, _ = layer_backward(self.layers["action_enc"], cache.actions_onehot, action_code, action_code, grad_action_code)
        grads["world.action_enc.weight"] = dw
        grads["world.action_enc.bias"] = db
        return {name: grads[name] for name in self.parameters()}


def world_forward(model: WorldModel, state: np.ndarray, action: int) -> Tuple[np.ndarray, float, float]:
    """单个 (s, a) 的 (p(aᵘ), r̂, t̂)"""
    output, _ = model.forward(state, [action])
    return output.user_probs, float(output.reward), float(output.terminal)
