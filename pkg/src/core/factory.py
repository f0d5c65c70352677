import logging
import os
from typing import Tuple

import numpy as np

from src.agent.dqn import DQNAgent
from src.agent.q_network import QNetwork
from src.agent.replay_buffer import ReplayBuffer
from src.dialogue.actions import AgentActionSpace, UserActSpace
from src.dialogue.domain import DialogueDomain
from src.dialogue.goals import GoalCorpus
from src.dialogue.knowledge_base import KnowledgeBase
from src.dialogue.ontology import NUM_CATEGORIES, SOURCE_REAL, SOURCE_SIMULATED
from src.nn.optim import RMSProp
from src.pipeline.variants import VariantConfig
from src.planning.goal_sampler import ActiveGoalSampler, CategoryStats, UniformGoalSampler
from src.planning.switcher import Switcher, ThresholdSchedule
from src.utils.config_loader import RunConfig
from src.world_model.model import WorldModel

logger = logging.getLogger(__name__)


class PipelineFactory:
    """训练组件工厂类 - 负责按配置集中创建和组装对象"""

    @staticmethod
    def create_domain(config: RunConfig) -> DialogueDomain:
        """创建知识库与目标语料，配置了路径时从文件加载"""
        domain_cfg = config.domain
        if domain_cfg.kb_path and os.path.exists(domain_cfg.kb_path):
            kb = KnowledgeBase.load(domain_cfg.kb_path)
            logger.info(f"从 {domain_cfg.kb_path} 加载知识库: {len(kb)} 行")
        else:
            kb = KnowledgeBase.generate(seed=domain_cfg.kb_seed, n_rows=domain_cfg.kb_rows)

        if domain_cfg.goals_path and os.path.exists(domain_cfg.goals_path):
            corpus = GoalCorpus.load(domain_cfg.goals_path)
            corpus.check_against(kb)
            logger.info(f"从 {domain_cfg.goals_path} 加载目标语料: {len(corpus)} 个目标")
        else:
            corpus = GoalCorpus.build(
                kb,
                seed=domain_cfg.goal_seed,
                size=domain_cfg.goal_corpus_size,
                stratified=domain_cfg.stratified_goals,
            )
        return DialogueDomain(
            kb=kb,
            corpus=corpus,
            action_space=AgentActionSpace(kb),
            user_acts=UserActSpace(),
            max_turns=domain_cfg.max_turns,
        )

    @staticmethod
    def create_agent(config: RunConfig, domain: DialogueDomain, rng: np.random.Generator) -> DQNAgent:
        agent_cfg = config.agent
        q = QNetwork.create(domain.state_dim, domain.n_actions, hidden_size=agent_cfg.hidden_size, rng=rng)
        return DQNAgent(
            q,
            gamma=agent_cfg.gamma,
            epsilon=agent_cfg.epsilon,
            learning_rate=agent_cfg.learning_rate,
            max_grad_norm=agent_cfg.max_grad_norm,
            batch_size=agent_cfg.batch_size,
        )

    @staticmethod
    def create_world_model(
        config: RunConfig, domain: DialogueDomain, rng: np.random.Generator
    ) -> Tuple[WorldModel, RMSProp]:
        wm_cfg = config.world_model
        model = WorldModel.create(
            domain.state_dim,
            domain.n_actions,
            domain.n_user_acts,
            encoder_size=wm_cfg.encoder_size,
            hidden_size=wm_cfg.hidden_size,
            rng=rng,
        )
        return model, RMSProp(model, learning_rate=wm_cfg.learning_rate, max_grad_norm=wm_cfg.max_grad_norm)

    @staticmethod
    def create_switcher(
        config: RunConfig, domain: DialogueDomain, rng: np.random.Generator
    ) -> Tuple[Switcher, RMSProp]:
        sw_cfg = config.switcher
        switcher = Switcher.create(
            domain.state_dim,
            domain.n_actions,
            encoder_size=sw_cfg.encoder_size,
            hidden_size=sw_cfg.hidden_size,
            rng=rng,
            reward_scale=sw_cfg.reward_scale or 2.0 * domain.max_turns,
        )
        return switcher, RMSProp(switcher.net, learning_rate=sw_cfg.learning_rate, max_grad_norm=sw_cfg.max_grad_norm)

    @staticmethod
    def create_schedule(config: RunConfig) -> ThresholdSchedule:
        sw_cfg = config.switcher
        return ThresholdSchedule(sw_cfg.threshold_low, sw_cfg.threshold_high, sw_cfg.anneal_epochs)

    @staticmethod
    def create_goal_sampler(config: RunConfig, variant: VariantConfig) -> ActiveGoalSampler:
        stats = CategoryStats(k=NUM_CATEGORIES, prefill=config.sampler.prefill)
        if variant.active_sampling:
            return ActiveGoalSampler(stats)
        return UniformGoalSampler(stats)

    @staticmethod
    def create_buffers(config: RunConfig, variant: VariantConfig) -> Tuple[ReplayBuffer, ReplayBuffer]:
        base = config.agent.real_buffer_size
        real = ReplayBuffer(variant.real_buffer_capacity(base), SOURCE_REAL)
        sim = ReplayBuffer(
            variant.sim_buffer_capacity(base, config.pipeline.sim_buffer_multiplier),
            SOURCE_SIMULATED,
        )
        return real, sim
