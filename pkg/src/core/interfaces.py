from abc import ABC, abstractmethod
from typing import NamedTuple, Optional

import numpy as np

from src.core.schemas import DialogueAct, EpisodeOutcome, UserGoal


class UserTurn(NamedTuple):
    user_act: DialogueAct
    done: bool
    outcome: Optional[EpisodeOutcome]


class BaseUser(ABC):
    """对话中的用户一方（规则模拟器或真人）"""

    @abstractmethod
    def reset(self, goal: UserGoal) -> DialogueAct:
        pass

    @abstractmethod
    def step(self, agent_act: DialogueAct) -> UserTurn:
        pass


class BasePolicy(ABC):
    """对话策略：根据状态编码与追踪状态选择 agent 动作模板下标"""

    @abstractmethod
    def act(self, features: np.ndarray, state, rng: np.random.Generator, explore: bool = False) -> int:
        pass


class BaseGoalSampler(ABC):
    """规划阶段的用户目标采样器"""

    @abstractmethod
    def sample_category(self, rng: np.random.Generator) -> int:
        pass

    @abstractmethod
    def sample_goal(self, corpus, rng: np.random.Generator) -> UserGoal:
        pass

    def record(self, category: int, success: bool) -> None:
        """接收一次验证结果，默认不做统计"""
