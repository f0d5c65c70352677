"""DQN 对话策略：ε-greedy 选动作、TD 目标、小批量更新、目标网络同步与 RBS 预热"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from src.agent.q_network import QNetwork
from src.agent.replay_buffer import ReplayBuffer, sample_union
from src.core.interfaces import BasePolicy, BaseUser
from src.core.schemas import DialogueRecord, EpisodeOutcome, Experience, UserGoal
from src.dialogue.actions import AgentActionSpace, UserActSpace
from src.dialogue.ontology import MAX_TURNS
from src.dialogue.runner import run_dialogue
from src.nn.checkpoint import load_parameters, save_parameters
from src.nn.losses import mse_loss
from src.nn.optim import RMSProp

logger = logging.getLogger(__name__)

STATUS_OK = "ok"
STATUS_EMPTY = "empty"
STATUS_SKIPPED = "skipped"


@dataclass
class TrainResult:
    status: str
    loss: Optional[float] = None
    batch_size: int = 0
    grad_norm: Optional[float] = None


@dataclass
class EvaluationResult:
    success_rate: float
    avg_reward: float
    avg_turns: float
    outcomes: List[EpisodeOutcome] = field(default_factory=list)


def select_action(q: QNetwork, state: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    """ε-greedy；ε=0 时不消耗随机数，argmax 平局取最小下标"""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0,1], got {epsilon}")
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(q.n_actions))
    return int(np.argmax(q.q_values(state)))


def td_targets(batch: Sequence[Experience], q_target: QNetwork, gamma: float) -> np.ndarray:
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must be in [0,1], got {gamma}")
    rewards = np.array([exp.reward for exp in batch], dtype=np.float64)
    terminal = np.array([exp.terminal for exp in batch], dtype=bool)
    next_states = np.stack([exp.next_state for exp in batch])
    max_next = q_target.q_values(next_states).max(axis=1)
    return np.where(terminal, rewards, rewards + gamma * max_next)


def sync_target(q: QNetwork) -> QNetwork:
    return q.copy()


class DQNAgent(BasePolicy):
    def __init__(
        self,
        q: QNetwork,
        gamma: float = 0.9,
        epsilon: float = 0.1,
        learning_rate: float = 1e-3,
        max_grad_norm: float = 1.0,
        batch_size: int = 16,
    ):
        self.q = q
        self.q_target = sync_target(q)
        self.gamma = gamma
        self.epsilon = epsilon
        self.batch_size = batch_size
        self.optimizer = RMSProp(q, learning_rate=learning_rate, max_grad_norm=max_grad_norm)
        self.updates = 0

    def act(self, features: np.ndarray, state, rng: np.random.Generator, explore: bool = False) -> int:
        return select_action(self.q, features, self.epsilon if explore else 0.0, rng)

    def sync_target(self):
        self.q_target = sync_target(self.q)

    def train_step(self, buffers: Sequence[ReplayBuffer], rng: np.random.Generator) -> TrainResult:
        """从 Bᵘ ∪ Bˢ 抽一个小批量做一次更新，返回更新前的 MSE"""
        batch = sample_union(buffers, self.batch_size, rng)
        if not batch:
            logger.warning("经验缓冲区为空，跳过 agent 训练")
            return TrainResult(STATUS_EMPTY)

        states = np.stack([exp.state for exp in batch])
        actions = np.array([exp.action for exp in batch])
        targets = td_targets(batch, self.q_target, self.gamma)

        q_all, cache = self.q.forward(states)
        rows = np.arange(len(batch))
        loss, grad_pred = mse_loss(q_all[rows, actions], targets)
        grad_out = np.zeros_like(q_all)
        grad_out[rows, actions] = grad_pred
        grads, _ = self.q.backward(cache, grad_out)
        norm = self.optimizer.step(grads)
        self.updates += 1
        logger.debug(f"agent 更新 #{self.updates}: loss={loss:.4f}, grad_norm={norm:.4f}")
        return TrainResult(STATUS_OK, loss=loss, batch_size=len(batch), grad_norm=norm)

    def save(self, filepath: str, metadata: Optional[dict] = None) -> str:
        meta = {"kind": "q_network", "gamma": self.gamma, "epsilon": self.epsilon}
        meta.update(metadata or {})
        return save_parameters(filepath, self.q.parameters(), meta)

    @classmethod
    def load(cls, filepath: str, **kwargs) -> "DQNAgent":
        return cls(QNetwork.from_parameters(load_parameters(filepath)), **kwargs)


def rbs_warm_start(
    rule_agent: BasePolicy,
    user: BaseUser,
    goals: Sequence[UserGoal],
    buffer: ReplayBuffer,
    action_space: AgentActionSpace,
    user_acts: UserActSpace,
    rng: np.random.Generator,
    n_dialogues: int = 50,
    first_dialogue_id: int = 0,
    max_turns: int = MAX_TURNS,
) -> List[DialogueRecord]:
    """Reply Buffer Spiking：用规则 agent 的完整对话预填 Bᵘ"""
    records = []
    for i in range(n_dialogues):
        goal = goals[int(rng.integers(len(goals)))]
        record = run_dialogue(
            rule_agent, user, goal, action_space, user_acts, rng,
            dialogue_id=first_dialogue_id + i, source=buffer.source, max_turns=max_turns,
        )
        buffer.extend(record.experiences)
        records.append(record)
    successes = sum(r.outcome.success for r in records)
    logger.info(f"RBS 预热完成: {n_dialogues} 个对话, 成功 {successes}, 缓冲区 {len(buffer)} 条经验")
    return records


def evaluate_policy(
    policy: BasePolicy,
    user: BaseUser,
    goals: Sequence[UserGoal],
    action_space: AgentActionSpace,
    user_acts: UserActSpace,
    rng: np.random.Generator,
    max_turns: int = MAX_TURNS,
) -> EvaluationResult:
    """贪心策略在给定目标上逐一对话，汇总成功率、平均奖励与平均轮数"""
    outcomes = []
    for i, goal in enumerate(goals):
        record = run_dialogue(policy, user, goal, action_space, user_acts, rng, dialogue_id=i, max_turns=max_turns)
        outcomes.append(record.outcome)
    if not outcomes:
        return EvaluationResult(0.0, 0.0, 0.0, [])
    return EvaluationResult(
        success_rate=float(np.mean([o.success for o in outcomes])),
        avg_reward=float(np.mean([o.reward for o in outcomes])),
        avg_turns=float(np.mean([o.turns for o in outcomes])),
        outcomes=outcomes,
    )
