"""通用对话执行器：真实采集、RBS、验证、测试与人工评测共用"""

import logging
from typing import Callable, Optional

import numpy as np

from src.core.interfaces import BasePolicy, BaseUser
from src.core.schemas import DialogueAct, DialogueRecord, Experience, UserGoal
from src.dialogue.actions import KIND_REQUEST, KIND_TASKCOMPLETE, AgentActionSpace, UserActSpace
from src.dialogue.ontology import GOAL_RELEVANT_SLOTS, MAX_TURNS, SOURCE_REAL
from src.dialogue.reward import transition_reward
from src.dialogue.state import DialogueState, encode_state

logger = logging.getLogger(__name__)

TurnCallback = Callable[[int, DialogueAct, DialogueAct], None]


class RuleAgent(BasePolicy):
    """按 schema 顺序请求每个未知的目标相关槽位，然后订票"""

    def __init__(self, action_space: AgentActionSpace):
        self.action_space = action_space

    def act(self, features: np.ndarray, state: DialogueState, rng: np.random.Generator, explore: bool = False) -> int:
        for slot in GOAL_RELEVANT_SLOTS:
            if slot not in state.user_informed and slot not in state.agent_requested:
                return self.action_space.index_of(KIND_REQUEST, slot)
        return self.action_space.index_of(KIND_TASKCOMPLETE)


def run_dialogue(
    policy: BasePolicy,
    user: BaseUser,
    goal: UserGoal,
    action_space: AgentActionSpace,
    user_acts: UserActSpace,
    rng: np.random.Generator,
    explore: bool = False,
    dialogue_id: int = 0,
    source: str = SOURCE_REAL,
    max_turns: int = MAX_TURNS,
    on_turn: Optional[TurnCallback] = None,
) -> DialogueRecord:
    user.reset(goal)
    experiences = []
    transcript = []
    while True:
        state = user.state
        features = encode_state(state, max_turns)
        action = policy.act(features, state, rng, explore=explore)
        agent_act = action_space.build_act(action, state)
        turn = user.step(agent_act)
        next_features = encode_state(user.state, max_turns)
        success = turn.outcome.success if turn.outcome else False
        experiences.append(Experience(
            state=features,
            action=action,
            reward=transition_reward(turn.done, success, max_turns),
            user_action=user_acts.index_of(turn.user_act),
            next_state=next_features,
            terminal=turn.done,
            source=source,
            dialogue_id=dialogue_id,
            position=len(experiences),
        ))
        transcript.append(("agent", agent_act))
        transcript.append(("user", turn.user_act))
        if on_turn is not None:
            on_turn(user.state.turn, agent_act, turn.user_act)
        if turn.done:
            break
    logger.debug(
        f"对话 {dialogue_id} 结束: {turn.outcome.status}, {turn.outcome.turns} 轮, 奖励 {turn.outcome.reward:.1f}"
    )
    return DialogueRecord(
        dialogue_id=dialogue_id,
        goal=goal,
        experiences=experiences,
        outcome=turn.outcome,
        transcript=transcript,
    )
