from dataclasses import dataclass

from src.dialogue.actions import AgentActionSpace, UserActSpace
from src.dialogue.goals import GoalCorpus
from src.dialogue.knowledge_base import KnowledgeBase
from src.dialogue.ontology import MAX_TURNS
from src.dialogue.state import STATE_DIM
from src.dialogue.user import RuleUserSimulator


@dataclass
class DialogueDomain:
    """一次实验共享的只读领域对象"""
    kb: KnowledgeBase
    corpus: GoalCorpus
    action_space: AgentActionSpace
    user_acts: UserActSpace
    max_turns: int = MAX_TURNS

    @property
    def state_dim(self) -> int:
        return STATE_DIM

    @property
    def n_actions(self) -> int:
        return len(self.action_space)

    @property
    def n_user_acts(self) -> int:
        return len(self.user_acts)

    def new_user(self) -> RuleUserSimulator:
        return RuleUserSimulator(max_turns=self.max_turns)
