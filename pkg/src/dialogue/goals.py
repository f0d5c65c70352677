"""用户目标语料的生成、分桶与持久化"""

import json
import logging
import os
from typing import Dict, List, Optional

import numpy as np

from src.core.schemas import UserGoal, category_of, slots_of_category
from src.dialogue.errors import GoalGenerationError
from src.dialogue.knowledge_base import KnowledgeBase
from src.dialogue.ontology import NUM_CATEGORIES, REQUESTABLE_EXTRAS, SLOT_MOVIENAME, SLOT_TICKET

logger = logging.getLogger(__name__)


def generate_goal_corpus(
    kb: KnowledgeBase,
    seed: int,
    size: int = 1024,
    stratified: bool = True,
    extra_request_prob: float = 0.5,
    max_retries: int = 20,
) -> List[UserGoal]:
    """生成目标语料，前 128 个目标恰好覆盖每个类别一次

    stratified=True 时类别按 i % 128 循环分配；否则 128 个之后的类别随机抽取。
    """
    if size < NUM_CATEGORIES:
        raise GoalGenerationError(f"goal corpus size must be >= {NUM_CATEGORIES}, got {size}")
    rng = np.random.default_rng(seed)
    goals: List[UserGoal] = []
    for goal_id in range(size):
        if stratified or goal_id < NUM_CATEGORIES:
            category = goal_id % NUM_CATEGORIES
        else:
            category = int(rng.integers(NUM_CATEGORIES))
        constraints = _draw_constraints(kb, category, rng, max_retries)
        request_slots = [SLOT_TICKET] + [slot for slot in REQUESTABLE_EXTRAS if rng.random() < extra_request_prob]
        goals.append(UserGoal(
            constraints=constraints,
            request_slots=tuple(request_slots),
            category_id=category,
            goal_id=goal_id,
        ))
    logger.info(f"已生成用户目标语料: {size} 个目标, seed={seed}, stratified={stratified}")
    return goals


def _draw_constraints(kb: KnowledgeBase, category: int, rng: np.random.Generator, max_retries: int) -> Dict[str, str]:
    slots = (SLOT_MOVIENAME,) + slots_of_category(category)
    for attempt in range(max_retries):
        row = kb.rows[int(rng.integers(len(kb.rows)))]
        constraints = {slot: row[slot] for slot in slots}
        if kb.find_rows(constraints):
            return constraints
        logger.debug(f"类别 {category} 的第 {attempt + 1} 次目标生成在知识库中无匹配行，重试")
    raise GoalGenerationError(f"knowledge base has no row for category {category} after {max_retries} attempts")


class GoalCorpus:
    """按类别分桶的目标集合"""

    def __init__(self, goals: List[UserGoal], seed: Optional[int] = None):
        self.goals = list(goals)
        self.seed = seed
        self.by_category: Dict[int, List[UserGoal]] = {c: [] for c in range(NUM_CATEGORIES)}
        for goal in self.goals:
            self.by_category.setdefault(goal.category_id, []).append(goal)

    def __len__(self) -> int:
        return len(self.goals)

    def bucket(self, category_id: int) -> List[UserGoal]:
        return self.by_category.get(category_id, [])

    def uniform(self, rng: np.random.Generator) -> UserGoal:
        return self.goals[int(rng.integers(len(self.goals)))]

    def covered_categories(self) -> List[int]:
        return sorted(c for c, bucket in self.by_category.items() if bucket)

    def check_against(self, kb: KnowledgeBase):
        for goal in self.goals:
            for slot, value in goal.constraints.items():
                if not kb.in_vocab(slot, value):
                    raise GoalGenerationError(f"goal {goal.goal_id}: {slot}={value} not in knowledge base vocabulary")
            if not kb.find_rows(goal.constraints):
                raise GoalGenerationError(f"goal {goal.goal_id} is not satisfiable by the knowledge base")

    def save(self, filepath: str):
        os.makedirs(os.path.dirname(filepath) or ".", exist_ok=True)
        payload = {"seed": self.seed, "goals": [goal.to_dict() for goal in self.goals]}
        with open(filepath, "w", encoding="utf-8") as f:
            json.dump(payload, f, ensure_ascii=False, indent=2)

    @classmethod
    def load(cls, filepath: str) -> "GoalCorpus":
        with open(filepath, "r", encoding="utf-8") as f:
            payload = json.load(f)
        return cls([UserGoal.from_dict(raw) for raw in payload.get("goals", [])], seed=payload.get("seed"))

    @classmethod
    def build(cls, kb: KnowledgeBase, seed: int, size: int = 1024, stratified: bool = True) -> "GoalCorpus":
        return cls(generate_goal_corpus(kb, seed, size=size, stratified=stratified), seed=seed)


__all__ = ["generate_goal_corpus", "GoalCorpus", "category_of", "slots_of_category"]
