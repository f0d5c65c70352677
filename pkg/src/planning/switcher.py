"""切换器：LSTM 逐轮打分，区分模拟经验与真实经验并筛选进入 Bˢ 的轮次"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from src.agent.dqn import STATUS_EMPTY, STATUS_OK, STATUS_SKIPPED
from src.agent.replay_buffer import ReplayBuffer, sample_union
from src.core.schemas import Experience, TurnRecord
from src.dialogue.ontology import MAX_TURNS
from src.nn.base import GradientSet
from src.nn.losses import bce_loss
from src.nn.lstm import LstmNet
from src.nn.optim import RMSProp

logger = logging.getLogger(__name__)

Turn = Union[TurnRecord, Experience]


class EmptyDialogueError(ValueError):
    pass


@dataclass
class ThresholdSchedule:
    low: float = 0.3
    high: float = 0.6
    anneal_epochs: int = 200

    def __post_init__(self):
        if not 0.0 < self.low <= self.high < 1.0:
            raise ValueError(f"threshold schedule needs 0 < low <= high < 1, got {self.low}, {self.high}")
        if self.anneal_epochs <= 0:
            raise ValueError(f"anneal_epochs must be > 0, got {self.anneal_epochs}")


def quality_threshold(schedule: ThresholdSchedule, epoch: int) -> float:
    if epoch < 0:
        raise ValueError(f"epoch must be >= 0, got {epoch}")
    progress = min(1.0, epoch / schedule.anneal_epochs)
    return schedule.low + (schedule.high - schedule.low) * progress


class Switcher:
    """每轮特征为 s ⊕ onehot(a) ⊕ r/reward_scale"""

    def __init__(self, net: LstmNet, n_actions: int, reward_scale: float = 2.0 * MAX_TURNS):
        self.net = net
        self.n_actions = n_actions
        self.reward_scale = reward_scale
        if net.input_dim <= n_actions + 1:
            raise ValueError("switcher input width leaves no room for the state encoding")

    @classmethod
    def create(
        cls,
        state_dim: int,
        n_actions: int,
        encoder_size: int = 80,
        hidden_size: int = 126,
        rng: Optional[np.random.Generator] = None,
        reward_scale: float = 2.0 * MAX_TURNS,
    ) -> "Switcher":
        net = LstmNet.build(state_dim + n_actions + 1, encoder_size, hidden_size, rng=rng)
        return cls(net, n_actions, reward_scale)

    def features(self, dialogue: Sequence[Turn]) -> List[np.ndarray]:
        rows = []
        for turn in dialogue:
            onehot = np.zeros(self.n_actions)
            onehot[turn.action] = 1.0
            rows.append(np.concatenate([turn.state, onehot, [turn.reward / self.reward_scale]]))
        return rows

    def score_turns(self, dialogue: Sequence[Turn]) -> np.ndarray:
        if len(dialogue) == 0:
            raise EmptyDialogueError("empty dialogue")
        return self.net.score(self.features(dialogue))

    def score_dialogue(self, dialogue: Sequence[Turn]) -> float:
        return float(np.mean(self.score_turns(dialogue)))


def score_turns(switcher: Switcher, dialogue: Sequence[Turn]) -> np.ndarray:
    return switcher.score_turns(dialogue)


def score_dialogue(switcher: Switcher, dialogue: Sequence[Turn]) -> float:
    return switcher.score_dialogue(dialogue)


def filter_and_store(
    switcher: Switcher,
    dialogue: Sequence[Experience],
    threshold: float,
    buffer: ReplayBuffer,
    turn_scores: Optional[np.ndarray] = None,
) -> int:
    """对话均分达到阈值时，把分数不低于阈值的轮次写入 Bˢ，返回写入条数"""
    scores = switcher.score_turns(dialogue) if turn_scores is None else np.asarray(turn_scores)
    if len(scores) != len(dialogue):
        raise ValueError(f"{len(scores)} scores for {len(dialogue)} turns")
    if len(scores) == 0 or float(np.mean(scores)) < threshold:
        return 0
    stored = 0
    for exp, score in zip(dialogue, scores):
        if score >= threshold:
            buffer.push(exp, history=dialogue)
            stored += 1
    return stored


def switcher_loss(switcher: Switcher, items: Sequence[Tuple[Sequence[Turn], float]]) -> Tuple[float, GradientSet]:
    """items 为 (历史前缀, 标签)，只对前缀最后一轮的分数计算 BCE"""
    loss, grads, _ = _prefix_bce(switcher, items)
    return loss, grads


def _prefix_bce(switcher: Switcher, items: Sequence[Tuple[Sequence[Turn], float]]) -> Tuple[float, GradientSet, np.ndarray]:
    net = switcher.net
    grads = net.zero_gradients()
    if not items:
        return 0.0, grads, np.zeros(0)
    finals = []
    caches = []
    for prefix, _ in items:
        scores, cache = net.forward(switcher.features(prefix))
        finals.append(scores[-1])
        caches.append(cache)
    labels = np.array([label for _, label in items], dtype=np.float64)
    loss, grad_final = bce_loss(np.array(finals), labels)
    for (prefix, _), cache, g in zip(items, caches, grad_final):
        grad_scores = np.zeros(len(prefix))
        grad_scores[-1] = g
        for name, value in net.backward(cache, grad_scores).items():
            grads[name] += value
    return loss, grads, np.array(finals)


@dataclass
class SwitcherTrainResult:
    status: str
    loss: Optional[float] = None
    steps: int = 0
    real_score: Optional[float] = None
    sim_score: Optional[float] = None


def train_switcher(
    switcher: Switcher,
    real_buffer: ReplayBuffer,
    sim_buffer: ReplayBuffer,
    optimizer: RMSProp,
    rng: np.random.Generator,
    batch_size: int = 16,
    n_batches: int = 1,
) -> SwitcherTrainResult:
    """每个小批量各取 batch_size 条真实轮次 (标签 1) 与模拟轮次 (标签 0)"""
    if len(real_buffer) == 0:
        logger.warning("真实经验缓冲区为空，跳过切换器训练")
        return SwitcherTrainResult(STATUS_EMPTY)
    if len(sim_buffer) == 0:
        logger.warning("模拟经验缓冲区为空，跳过切换器训练")
        return SwitcherTrainResult(STATUS_SKIPPED)

    first = None
    for _ in range(n_batches):
        real = [(real_buffer.prefix(exp), 1.0) for exp in sample_union([real_buffer], batch_size, rng)]
        sim = [(sim_buffer.prefix(exp), 0.0) for exp in sample_union([sim_buffer], batch_size, rng)]
        loss, grads, finals = _prefix_bce(switcher, real + sim)
        optimizer.step(grads)
        if first is None:
            first = SwitcherTrainResult(
                STATUS_OK,
                loss=loss,
                steps=n_batches,
                real_score=float(np.mean(finals[:len(real)])),
                sim_score=float(np.mean(finals[len(real):])),
            )
    logger.debug(f"切换器训练 {n_batches} 步: loss={first.loss:.4f}")
    return first
