from typing import Optional

import numpy as np

from src.nn.dense import DenseLayer, DenseNet


class QNetwork(DenseNet):
    """Q(s,·): D -> 80 relu -> |A| 线性输出"""

    @classmethod
    def create(
        cls,
        state_dim: int,
        n_actions: int,
        hidden_size: int = 80,
        rng: Optional[np.random.Generator] = None,
    ) -> "QNetwork":
        rng = rng or np.random.default_rng(0)
        return cls(
            [
                DenseLayer.initialized(state_dim, hidden_size, "relu", rng),
                DenseLayer.initialized(hidden_size, n_actions, "identity", rng),
            ],
            name="q",
        )

    @property
    def n_actions(self) -> int:
        return self.output_dim

    def q_values(self, states: np.ndarray) -> np.ndarray:
        return self.predict(states)

    @classmethod
    def from_parameters(cls, params) -> "QNetwork":
        try:
            layers = [
                DenseLayer(np.array(params["q.0.weight"]), np.array(params["q.0.bias"]), "relu"),
                DenseLayer(np.array(params["q.1.weight"]), np.array(params["q.1.bias"]), "identity"),
            ]
        except KeyError as e:
            raise ValueError(f"checkpoint is not a Q-network: missing {e}") from e
        return cls(layers, name="q")
