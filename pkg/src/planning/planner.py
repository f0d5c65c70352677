"""规划阶段：用世界模型生成模拟对话并写入 Bˢ"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from src.agent.replay_buffer import ReplayBuffer
from src.core.interfaces import BaseGoalSampler, BasePolicy
from src.dialogue.domain import DialogueDomain
from src.pipeline.variants import VariantConfig
from src.planning.switcher import Switcher, filter_and_store
from src.world_model.model import WorldModel
from src.world_model.rollout import simulate_dialogue

logger = logging.getLogger(__name__)

EXIT_NONE = "none"
EXIT_FIXED = "fixed"
EXIT_QUALITY = "quality"
EXIT_CAP = "cap"


@dataclass
class PlanningResult:
    dialogues: int = 0
    stored: int = 0
    exit_reason: str = EXIT_NONE
    scores: List[float] = field(default_factory=list)


class Planner:
    def __init__(
        self,
        variant: VariantConfig,
        domain: DialogueDomain,
        world_model: Optional[WorldModel],
        sampler: BaseGoalSampler,
        sim_buffer: ReplayBuffer,
        switcher: Optional[Switcher] = None,
        max_planning_dialogues: int = 30,
    ):
        self.variant = variant
        self.domain = domain
        self.world_model = world_model
        self.sampler = sampler
        self.sim_buffer = sim_buffer
        self.switcher = switcher
        self.max_planning_dialogues = max_planning_dialogues
        self.next_dialogue_id = 0

    def _rollout(self, policy: BasePolicy, goal, rng: np.random.Generator):
        record = simulate_dialogue(
            policy,
            self.world_model,
            goal,
            self.domain.action_space,
            self.domain.user_acts,
            rng,
            dialogue_id=self.next_dialogue_id,
            max_turns=self.domain.max_turns,
        )
        self.next_dialogue_id += 1
        return record

    def run(self, policy: BasePolicy, rng: np.random.Generator, threshold: float) -> PlanningResult:
        """DQN 不规划；DDQ(K) 固定 K-1 次且不过滤；Switch 变体按质量门控循环"""
        result = PlanningResult()
        if not self.variant.plans:
            return result

        if not self.variant.uses_switcher:
            for _ in range(self.variant.k - 1):
                record = self._rollout(policy, self.domain.corpus.uniform(rng), rng)
                result.stored += self.sim_buffer.extend(record.experiences)
                result.dialogues += 1
            result.exit_reason = EXIT_FIXED
            return result

        while True:
            goal = self.sampler.sample_goal(self.domain.corpus, rng)
            record = self._rollout(policy, goal, rng)
            result.dialogues += 1
            scores = self.switcher.score_turns(record.experiences)
            quality = float(np.mean(scores))
            result.scores.append(quality)
            result.stored += filter_and_store(self.switcher, record.experiences, threshold, self.sim_buffer, scores)
            if quality < threshold:
                result.exit_reason = EXIT_QUALITY
                break
            if result.dialogues >= self.max_planning_dialogues:
                result.exit_reason = EXIT_CAP
                break
        logger.debug(
            f"规划结束: {result.dialogues} 个模拟对话, 写入 {result.stored} 条, 退出原因 {result.exit_reason}"
        )
        return result


def planning_phase(planner: Planner, policy: BasePolicy, rng: np.random.Generator, threshold: float) -> int:
    return planner.run(policy, rng, threshold).dialogues
