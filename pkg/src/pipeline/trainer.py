"""单次运行（一个变体 × 一个种子）的逐 epoch 训练流程"""

import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from src.agent.dqn import STATUS_OK, DQNAgent, EvaluationResult, evaluate_policy, rbs_warm_start
from src.core.factory import PipelineFactory
from src.core.interfaces import BaseGoalSampler, BasePolicy
from src.core.schemas import EpisodeOutcome, EpochMetrics
from src.dialogue.domain import DialogueDomain
from src.dialogue.ontology import NUM_CATEGORIES
from src.dialogue.runner import RuleAgent, run_dialogue
from src.pipeline.variants import VariantConfig
from src.planning.planner import Planner
from src.planning.switcher import quality_threshold, train_switcher
from src.utils.config_loader import RunConfig
from src.world_model.training import train_world_model

logger = logging.getLogger(__name__)

RNG_STREAMS = ("init", "rbs", "real", "planning", "training", "validation", "test")


class EpochError(RuntimeError):
    def __init__(self, variant: str, seed: int, epoch: int, cause: Exception):
        self.variant = variant
        self.seed = seed
        self.epoch = epoch
        super().__init__(f"{variant} seed={seed} epoch={epoch}: {type(cause).__name__}: {cause}")


@dataclass
class Counters:
    real_dialogues_total: int = 0
    rbs_dialogues: int = 0
    validation_dialogues_total: int = 0
    simulated_dialogues_total: int = 0
    real_experiences_total: int = 0
    simulated_experiences_total: int = 0
    agent_updates_total: int = 0
    experiences_used_total: int = 0


@dataclass
class RunResult:
    variant: str
    seed: int
    metrics: List[EpochMetrics] = field(default_factory=list)
    category_success: List[float] = field(default_factory=list)
    checkpoints: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "variant": self.variant,
            "seed": self.seed,
            "metrics": [m.to_dict() for m in self.metrics],
            "category_success": list(self.category_success),
            "checkpoints": list(self.checkpoints),
        }

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "RunResult":
        return cls(
            variant=raw["variant"],
            seed=int(raw["seed"]),
            metrics=[EpochMetrics.from_dict(m) for m in raw.get("metrics", [])],
            category_success=list(raw.get("category_success", [])),
            checkpoints=list(raw.get("checkpoints", [])),
        )


def validate(
    policy: BasePolicy,
    domain: DialogueDomain,
    sampler: BaseGoalSampler,
    n_dialogues: int,
    offset: int,
    rng: np.random.Generator,
) -> List[EpisodeOutcome]:
    """贪心策略按类别轮转验证，更新类别统计；验证对话不进入任何缓冲区"""
    user = domain.new_user()
    outcomes = []
    for j in range(n_dialogues):
        category = (offset + j) % NUM_CATEGORIES
        bucket = domain.corpus.bucket(category)
        goal = bucket[int(rng.integers(len(bucket)))] if bucket else domain.corpus.uniform(rng)
        record = run_dialogue(
            policy, user, goal, domain.action_space, domain.user_acts, rng,
            dialogue_id=j, max_turns=domain.max_turns,
        )
        sampler.record(goal.category_id, record.outcome.success)
        outcomes.append(record.outcome)
    return outcomes


def fixed_test_goals(domain: DialogueDomain, seed: int, n: int):
    """同一种子下各变体使用同一组测试目标"""
    rng = np.random.default_rng(seed)
    return [domain.corpus.uniform(rng) for _ in range(n)]


class Trainer:
    def __init__(
        self,
        config: RunConfig,
        variant: VariantConfig,
        seed: int,
        domain: DialogueDomain,
        checkpoint_dir: Optional[str] = None,
    ):
        self.config = config
        self.variant = variant
        self.seed = seed
        self.domain = domain
        self.checkpoint_dir = checkpoint_dir
        children = np.random.SeedSequence(seed).spawn(len(RNG_STREAMS))
        self.rngs = {name: np.random.default_rng(child) for name, child in zip(RNG_STREAMS, children)}

        init_rng = self.rngs["init"]
        self.agent: DQNAgent = PipelineFactory.create_agent(config, domain, init_rng)
        self.real_buffer, self.sim_buffer = PipelineFactory.create_buffers(config, variant)
        self.sampler = PipelineFactory.create_goal_sampler(config, variant)
        self.schedule = PipelineFactory.create_schedule(config)
        self.world_model = self.wm_optimizer = None
        self.switcher = self.sw_optimizer = None
        if variant.plans:
            self.world_model, self.wm_optimizer = PipelineFactory.create_world_model(config, domain, init_rng)
        if variant.uses_switcher:
            self.switcher, self.sw_optimizer = PipelineFactory.create_switcher(config, domain, init_rng)
        self.planner = Planner(
            variant,
            domain,
            self.world_model,
            self.sampler,
            self.sim_buffer,
            switcher=self.switcher,
            max_planning_dialogues=config.pipeline.max_planning_dialogues,
        )
        self.user = domain.new_user()
        self.test_goals = fixed_test_goals(domain, seed, config.pipeline.test_dialogues)
        self.counters = Counters()
        self.validation_offset = 0
        self.next_real_id = 0
        self.checkpoints: List[str] = []

    # ---- 初始化 ----

    def setup(self):
        """RBS 预热 Bᵘ，规划类变体再用 RBS 数据预训练世界模型"""
        records = rbs_warm_start(
            RuleAgent(self.domain.action_space),
            self.user,
            self.domain.corpus.goals,
            self.real_buffer,
            self.domain.action_space,
            self.domain.user_acts,
            self.rngs["rbs"],
            n_dialogues=self.config.agent.rbs_dialogues,
            first_dialogue_id=self.next_real_id,
            max_turns=self.domain.max_turns,
        )
        self.next_real_id += len(records)
        self.counters.rbs_dialogues = len(records)
        self.counters.real_experiences_total += sum(len(r.experiences) for r in records)

        if self.world_model is not None and self.config.world_model.pretrain_batches > 0:
            result = self._train_world_model(self.config.world_model.pretrain_batches)
            if result.status == STATUS_OK:
                logger.info(f"世界模型预训练完成: 首批总损失 {result.loss.total:.4f}")

    # ---- 每个 epoch 的各阶段 ----

    def collect_real(self) -> int:
        count = self.variant.real_dialogues_per_epoch
        for _ in range(count):
            goal = self.domain.corpus.uniform(self.rngs["real"])
            record = run_dialogue(
                self.agent, self.user, goal, self.domain.action_space, self.domain.user_acts,
                self.rngs["real"], explore=True, dialogue_id=self.next_real_id, max_turns=self.domain.max_turns,
            )
            self.next_real_id += 1
            self.real_buffer.extend(record.experiences)
            self.counters.real_experiences_total += len(record.experiences)
        self.counters.real_dialogues_total += count
        return count

    def _train_world_model(self, n_batches: int):
        wm_cfg = self.config.world_model
        return train_world_model(
            self.world_model, self.real_buffer, self.wm_optimizer, self.rngs["training"],
            batch_size=wm_cfg.batch_size, n_batches=n_batches, max_turns=self.domain.max_turns,
        )

    def train_agent(self) -> Optional[float]:
        losses = []
        for _ in range(self.config.agent.batches_per_epoch):
            result = self.agent.train_step([self.real_buffer, self.sim_buffer], self.rngs["training"])
            if result.status != STATUS_OK:
                break
            losses.append(result.loss)
            self.counters.agent_updates_total += 1
            self.counters.experiences_used_total += result.batch_size
        return float(np.mean(losses)) if losses else None

    def validate(self) -> List[EpisodeOutcome]:
        n = self.config.pipeline.validation_dialogues
        outcomes = validate(self.agent, self.domain, self.sampler, n, self.validation_offset, self.rngs["validation"])
        self.validation_offset = (self.validation_offset + n) % NUM_CATEGORIES
        self.counters.validation_dialogues_total += n
        return outcomes

    def test(self) -> EvaluationResult:
        return evaluate_policy(
            self.agent, self.domain.new_user(), self.test_goals, self.domain.action_space,
            self.domain.user_acts, self.rngs["test"], max_turns=self.domain.max_turns,
        )

    def run_epoch(self, epoch: int) -> EpochMetrics:
        cfg = self.config
        metrics = EpochMetrics(variant=self.variant.label, seed=self.seed, epoch=epoch)
        threshold = quality_threshold(self.schedule, epoch - 1)

        self.agent.sync_target()
        metrics.real_dialogues = self.collect_real()

        sim_before = len(self.sim_buffer)
        planning = self.planner.run(self.agent, self.rngs["planning"], threshold)
        metrics.simulated_dialogues = planning.dialogues
        metrics.planning_exit = planning.exit_reason
        self.counters.simulated_dialogues_total += planning.dialogues
        self.counters.simulated_experiences_total += planning.stored
        logger.debug(f"Bˢ 长度 {sim_before} -> {len(self.sim_buffer)}")

        if self.world_model is not None:
            wm_result = self._train_world_model(cfg.world_model.batches_per_epoch)
            if wm_result.loss is not None:
                metrics.world_model_loss = wm_result.loss.total

        if self.switcher is not None:
            metrics.quality_threshold = threshold
            sw_cfg = cfg.switcher
            sw_result = train_switcher(
                self.switcher, self.real_buffer, self.sim_buffer, self.sw_optimizer, self.rngs["training"],
                batch_size=sw_cfg.batch_size, n_batches=sw_cfg.batches_per_epoch,
            )
            metrics.switcher_loss = sw_result.loss
            metrics.switcher_real_score = sw_result.real_score
            metrics.switcher_sim_score = sw_result.sim_score

        metrics.agent_loss = self.train_agent()

        outcomes = self.validate()
        metrics.validation_success_rate = float(np.mean([o.success for o in outcomes]))
        stats = self.sampler.stats
        metrics.category_failure_rates = [float(v) for v in stats.failure_rates]
        metrics.category_counts = [int(v) for v in stats.counts]

        if epoch % cfg.pipeline.eval_interval == 0 or epoch == cfg.pipeline.max_epoch:
            evaluation = self.test()
            metrics.success_rate = evaluation.success_rate
            metrics.avg_reward = evaluation.avg_reward
            metrics.avg_turns = evaluation.avg_turns

        for name, value in vars(self.counters).items():
            setattr(metrics, name, value)

        if epoch in cfg.pipeline.checkpoint_epochs or epoch == cfg.pipeline.max_epoch:
            self._save_checkpoint(epoch)

        logger.info(
            f"[{self.variant.label} seed={self.seed}] epoch {epoch}: "
            f"success={_fmt(metrics.success_rate)} reward={_fmt(metrics.avg_reward)} turns={_fmt(metrics.avg_turns)} "
            f"real={metrics.real_dialogues} sim={metrics.simulated_dialogues} exit={metrics.planning_exit}"
        )
        return metrics

    def evaluate_categories(self) -> List[float]:
        """每个类别用 category_eval_dialogues 个目标做贪心测试，返回各类别成功率"""
        n = self.config.pipeline.category_eval_dialogues
        if n == 0:
            return []
        user = self.domain.new_user()
        rates = []
        for category in range(NUM_CATEGORIES):
            bucket = self.domain.corpus.bucket(category)
            if not bucket:
                rates.append(0.0)
                continue
            goals = [bucket[j % len(bucket)] for j in range(n)]
            result = evaluate_policy(
                self.agent, user, goals, self.domain.action_space, self.domain.user_acts,
                self.rngs["test"], max_turns=self.domain.max_turns,
            )
            rates.append(result.success_rate)
        return rates

    def _save_checkpoint(self, epoch: int):
        if not self.checkpoint_dir:
            return
        path = os.path.join(self.checkpoint_dir, f"q_epoch_{epoch:04d}.json")
        self.agent.save(path, {"variant": self.variant.label, "seed": self.seed, "epoch": epoch})
        self.checkpoints.append(path)

    def run(self, max_epoch: Optional[int] = None) -> RunResult:
        max_epoch = max_epoch or self.config.pipeline.max_epoch
        result = RunResult(variant=self.variant.label, seed=self.seed)
        try:
            self.setup()
        except Exception as e:
            raise EpochError(self.variant.label, self.seed, 0, e) from e
        for epoch in range(1, max_epoch + 1):
            try:
                result.metrics.append(self.run_epoch(epoch))
            except Exception as e:
                logger.error(f"[{self.variant.label} seed={self.seed}] epoch {epoch} 失败: {e}")
                raise EpochError(self.variant.label, self.seed, epoch, e) from e
        result.category_success = self.evaluate_categories()
        result.checkpoints = list(self.checkpoints)
        return result


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.3f}"
