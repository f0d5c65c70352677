"""按类别失败率主动选择规划用户目标

每个类别抽一次 pᵢ ~ N(fᵢ, sqrt(k·ln N / nᵢ))，取最大者；nᵢ 预填 5 个伪成功样本。
"""

import logging
import math
from typing import Any, Dict, Union

import numpy as np

from src.core.interfaces import BaseGoalSampler
from src.core.schemas import UserGoal
from src.dialogue.ontology import NUM_CATEGORIES, STATUS_FAILURE, STATUS_SUCCESS

logger = logging.getLogger(__name__)

DEFAULT_PREFILL = 5


class CategoryStats:
    def __init__(self, k: int = NUM_CATEGORIES, prefill: int = DEFAULT_PREFILL):
        if k < 1:
            raise ValueError(f"category count must be >= 1, got {k}")
        if prefill < 1:
            raise ValueError(f"prefill must be >= 1, got {prefill}")
        self.k = k
        self.prefill = prefill
        self.failures = np.zeros(k, dtype=np.int64)
        self.counts = np.full(k, prefill, dtype=np.int64)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def failure_rates(self) -> np.ndarray:
        return self.failures / self.counts

    def failure_rate(self, category: int) -> float:
        return float(self.failures[category] / self.counts[category])

    def std_devs(self) -> np.ndarray:
        return np.sqrt(self.k * math.log(self.total) / self.counts)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "prefill": self.prefill,
            "failures": [int(v) for v in self.failures],
            "counts": [int(v) for v in self.counts],
        }

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "CategoryStats":
        stats = cls(k=int(raw["k"]), prefill=int(raw.get("prefill", DEFAULT_PREFILL)))
        stats.failures = np.array(raw["failures"], dtype=np.int64)
        stats.counts = np.array(raw["counts"], dtype=np.int64)
        return stats


def exploration_width(k: int, total: int, count: int) -> float:
    return math.sqrt(k * math.log(total) / count)


def update_stats(stats: CategoryStats, category: int, outcome: Union[str, bool]):
    if not 0 <= category < stats.k:
        raise ValueError(f"category {category} out of range [0,{stats.k})")
    if isinstance(outcome, str):
        if outcome not in (STATUS_SUCCESS, STATUS_FAILURE):
            raise ValueError(f"unknown outcome: {outcome!r}")
        failed = outcome == STATUS_FAILURE
    else:
        failed = not outcome
    stats.counts[category] += 1
    if failed:
        stats.failures[category] += 1


def sample_category(stats: CategoryStats, rng: np.random.Generator) -> int:
    draws = rng.normal(stats.failure_rates, stats.std_devs())
    return int(np.argmax(draws))


def sample_categories(stats: CategoryStats, rng: np.random.Generator, size: int) -> np.ndarray:
    """批量抽取 size 次类别，供蒙特卡洛分析"""
    draws = rng.normal(stats.failure_rates, stats.std_devs(), size=(size, stats.k))
    return np.argmax(draws, axis=1)


def goal_from_bucket(corpus, category: int, rng: np.random.Generator) -> UserGoal:
    bucket = corpus.bucket(category)
    if not bucket:
        logger.warning(f"类别 {category} 没有可用目标，退回全体目标均匀抽样")
        return corpus.uniform(rng)
    return bucket[int(rng.integers(len(bucket)))]


class ActiveGoalSampler(BaseGoalSampler):
    def __init__(self, stats: CategoryStats = None):
        self.stats = stats or CategoryStats()

    def sample_category(self, rng: np.random.Generator) -> int:
        return sample_category(self.stats, rng)

    def sample_goal(self, corpus, rng: np.random.Generator) -> UserGoal:
        return goal_from_bucket(corpus, self.sample_category(rng), rng)

    def record(self, category: int, success: bool) -> None:
        update_stats(self.stats, category, success)


class UniformGoalSampler(ActiveGoalSampler):
    """类别均匀抽取，统计照常累积以便导出"""

    def sample_category(self, rng: np.random.Generator) -> int:
        return int(rng.integers(self.stats.k))


def sample_goal(sampler: BaseGoalSampler, corpus, rng: np.random.Generator) -> UserGoal:
    return sampler.sample_goal(corpus, rng)
