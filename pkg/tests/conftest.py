import numpy as np
import pytest

from src.core.factory import PipelineFactory
from src.dialogue.goals import GoalCorpus
from src.dialogue.knowledge_base import KnowledgeBase
from src.utils.config_loader import RunConfig, config_from_dict


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def kb():
    return KnowledgeBase.generate(seed=7, n_rows=100)


@pytest.fixture(scope="session")
def corpus(kb):
    return GoalCorpus.build(kb, seed=11, size=256)


@pytest.fixture(scope="session")
def domain():
    config = RunConfig()
    config.domain.goal_corpus_size = 256
    return PipelineFactory.create_domain(config)


@pytest.fixture
def small_config(tmp_path) -> RunConfig:
    """秒级完成的小规模训练配置"""
    return config_from_dict({
        "domain": {"goal_corpus_size": 256},
        "agent": {"hidden_size": 16, "batch_size": 4, "batches_per_epoch": 2, "rbs_dialogues": 4},
        "world_model": {"encoder_size": 8, "hidden_size": 12, "batch_size": 4,
                        "batches_per_epoch": 2, "pretrain_batches": 2},
        "switcher": {"encoder_size": 6, "hidden_size": 5, "batch_size": 2, "batches_per_epoch": 1},
        "pipeline": {
            "variants": ["DQN"],
            "seeds": [1],
            "max_epoch": 2,
            "test_dialogues": 3,
            "validation_dialogues": 16,
            "max_planning_dialogues": 3,
            "checkpoint_epochs": [1],
            "category_eval_dialogues": 1,
        },
        "output_dir": str(tmp_path / "runs"),
    })
