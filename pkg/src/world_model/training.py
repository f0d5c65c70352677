"""世界模型的多任务损失与训练（只读取真实经验缓冲区）"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from src.agent.dqn import STATUS_EMPTY, STATUS_OK
from src.agent.replay_buffer import BufferSourceError, ReplayBuffer, sample_union
from src.core.schemas import Experience
from src.dialogue.ontology import MAX_TURNS, SOURCE_REAL
from src.dialogue.reward import normalize_reward
from src.nn.base import GradientSet
from src.nn.losses import bce_loss, categorical_cross_entropy, mse_loss
from src.nn.optim import RMSProp
from src.world_model.model import WorldModel

logger = logging.getLogger(__name__)


@dataclass
class WorldModelLoss:
    action_ce: float
    reward_mse: float
    terminal_bce: float

    @property
    def total(self) -> float:
        return self.action_ce + self.reward_mse + self.terminal_bce


@dataclass
class WorldModelTrainResult:
    status: str
    loss: Optional[WorldModelLoss] = None
    steps: int = 0


def reward_target(exp: Experience, max_turns: int = MAX_TURNS) -> float:
    """终止转移学习归一化的合并奖励，非终止转移目标为 0"""
    return normalize_reward(exp.reward, max_turns) if exp.terminal else 0.0


def world_model_loss(
    model: WorldModel,
    batch: Sequence[Experience],
    max_turns: int = MAX_TURNS,
) -> Tuple[WorldModelLoss, GradientSet]:
    """CE(aᵘ) + MSE(r/2L) + BCE(terminal)，三项等权"""
    states = np.stack([exp.state for exp in batch])
    actions = np.array([exp.action for exp in batch])
    user_targets = np.array([exp.user_action for exp in batch])
    reward_targets = np.array([reward_target(exp, max_turns) for exp in batch])
    term_targets = np.array([1.0 if exp.terminal else 0.0 for exp in batch])

    output, cache = model.forward(states, actions)
    ce, grad_probs = categorical_cross_entropy(output.user_probs, user_targets)
    mse, grad_reward = mse_loss(output.reward, reward_targets)
    bce, grad_term = bce_loss(output.terminal, term_targets)
    grads = model.backward(cache, grad_probs, grad_reward, grad_term)
    return WorldModelLoss(ce, mse, bce), grads


def train_world_model(
    model: WorldModel,
    buffer: ReplayBuffer,
    optimizer: RMSProp,
    rng: np.random.Generator,
    batch_size: int = 16,
    n_batches: int = 1,
    max_turns: int = MAX_TURNS,
) -> WorldModelTrainResult:
    """在 Bᵘ 上做 n_batches 次小批量更新，返回第一批的更新前损失"""
    if buffer.source != SOURCE_REAL:
        raise BufferSourceError("world model trains on real experiences only")
    if len(buffer) == 0:
        logger.warning("真实经验缓冲区为空，跳过世界模型训练")
        return WorldModelTrainResult(STATUS_EMPTY)

    first_loss = None
    for _ in range(n_batches):
        batch = sample_union([buffer], batch_size, rng)
        loss, grads = world_model_loss(model, batch, max_turns)
        optimizer.step(grads)
        if first_loss is None:
            first_loss = loss
    logger.debug(
        f"世界模型训练 {n_batches} 步: ce={first_loss.action_ce:.4f} "
        f"mse={first_loss.reward_mse:.4f} bce={first_loss.terminal_bce:.4f}"
    )
    return WorldModelTrainResult(STATUS_OK, loss=first_loss, steps=n_batches)
