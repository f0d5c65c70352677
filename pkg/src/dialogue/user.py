"""用户一方：状态追踪模板与规则用户模拟器"""

import logging
from abc import abstractmethod
from typing import Optional

from src.core.interfaces import BaseUser, UserTurn
from src.core.schemas import DialogueAct, EpisodeOutcome, UserGoal
from src.dialogue.errors import ProtocolError
from src.dialogue.ontology import (
    INTENT_CLOSING,
    INTENT_DENY,
    INTENT_GREETING,
    INTENT_INFORM,
    INTENT_CONFIRM_ANSWER,
    INTENT_NOT_SURE,
    INTENT_REQUEST,
    INTENT_THANKS,
    MAX_TURNS,
    STATUS_FAILURE,
    STATUS_SUCCESS,
    UNKNOWN,
)
from src.dialogue.reward import episode_reward
from src.dialogue.state import DialogueState, is_terminal_agent_act

logger = logging.getLogger(__name__)


def check_success(state: DialogueState, goal: UserGoal) -> bool:
    """已出票、所有约束取值与目标一致、所有请求槽位都被告知"""
    if not state.ticket_issued:
        return False
    for slot, value in goal.constraints.items():
        if state.agreed.get(slot) != value:
            return False
    return all(slot in state.agent_informed for slot in goal.request_slots)


class TrackedUser(BaseUser):
    """维护对话状态并判定终止的用户基类，子类只需实现 respond

    respond 返回 None 表示用户放弃对话，按失败处理。
    """

    def __init__(self, max_turns: int = MAX_TURNS):
        self.max_turns = max_turns
        self.goal: Optional[UserGoal] = None
        self.state = DialogueState()
        self.done = False
        self.outcome: Optional[EpisodeOutcome] = None

    def reset(self, goal: UserGoal) -> DialogueAct:
        self.goal = goal
        self.state = DialogueState()
        self.done = False
        self.outcome = None
        return self.state.last_user_act

    def step(self, agent_act: DialogueAct) -> UserTurn:
        if self.goal is None:
            raise ProtocolError("user has no goal; call reset first")
        if self.done:
            raise ProtocolError("episode already finished")
        agent_act.validate()

        self.state.apply_agent_act(agent_act)
        self.state.turn += 1
        if is_terminal_agent_act(agent_act):
            success = check_success(self.state, self.goal)
            return self._finish(DialogueAct(INTENT_THANKS if success else INTENT_CLOSING), success)

        user_act = self.respond(agent_act)
        if user_act is None:
            logger.info(f"用户在第 {self.state.turn} 轮放弃对话")
            return self._finish(DialogueAct(INTENT_CLOSING), False)
        user_act.validate()
        # 成功判定优先于轮数上限
        if self.state.turn >= self.max_turns:
            return self._finish(user_act, False)
        self.state.apply_user_act(user_act)
        return UserTurn(user_act, False, None)

    def _finish(self, user_act: DialogueAct, success: bool) -> UserTurn:
        self.state.apply_user_act(user_act)
        self.done = True
        self.outcome = EpisodeOutcome(
            status=STATUS_SUCCESS if success else STATUS_FAILURE,
            turns=self.state.turn,
            reward=episode_reward(success, self.state.turn, self.max_turns),
            category_id=self.goal.category_id,
        )
        return UserTurn(user_act, True, self.outcome)

    @abstractmethod
    def respond(self, agent_act: DialogueAct) -> Optional[DialogueAct]:
        pass


class RuleUserSimulator(TrackedUser):
    """确定性的规则用户，扮演“真实用户”"""

    def respond(self, agent_act: DialogueAct) -> Optional[DialogueAct]:
        goal = self.goal
        if agent_act.intent == INTENT_REQUEST:
            slot = next((s for s, v in agent_act.slots.items() if v == UNKNOWN), next(iter(agent_act.slots)))
            if slot in goal.constraints:
                return DialogueAct(INTENT_INFORM, {slot: goal.constraints[slot]})
            return DialogueAct(INTENT_NOT_SURE, {slot: UNKNOWN})

        if agent_act.intent == INTENT_INFORM and agent_act.slots:
            for slot, value in agent_act.slots.items():
                if slot in goal.constraints and goal.constraints[slot] != value:
                    return DialogueAct(INTENT_DENY, {slot: value})
            for slot, value in agent_act.slots.items():
                if slot in goal.request_slots:
                    return DialogueAct(INTENT_THANKS, {slot: value})
            slot, value = next(iter(agent_act.slots.items()))
            return DialogueAct(INTENT_CONFIRM_ANSWER, {slot: value})

        if agent_act.intent != INTENT_GREETING:
            logger.debug(f"规则用户无法回应 agent 意图 {agent_act.intent}，重述需求")
        return DialogueAct(INTENT_REQUEST, {slot: UNKNOWN for slot in goal.request_slots})
