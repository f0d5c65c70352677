"""Agent 与用户的对话行为模板空间

agent 模板（23 个）: request×8 目标相关槽位, inform×12 知识库列, taskcomplete, closing, greeting。
用户模板（44 个）: greeting, request-goal, inform×8, not_sure×8, deny×12, confirm_answer×12, thanks, closing。
"""

from typing import Dict, List, Optional, Tuple

from src.core.schemas import DialogueAct, UserGoal
from src.dialogue.errors import ProtocolError
from src.dialogue.knowledge_base import KnowledgeBase
from src.dialogue.ontology import (
    GOAL_RELEVANT_SLOTS,
    INFORMABLE_SLOTS,
    INTENT_CLOSING,
    INTENT_CONFIRM_ANSWER,
    INTENT_DENY,
    INTENT_GREETING,
    INTENT_INFORM,
    INTENT_NOT_SURE,
    INTENT_REQUEST,
    INTENT_THANKS,
    NO_TICKET,
    SLOT_TASKCOMPLETE,
    SLOT_TICKET,
    UNKNOWN,
)
from src.dialogue.state import DialogueState

KIND_REQUEST = "request"
KIND_INFORM = "inform"
KIND_TASKCOMPLETE = "taskcomplete"
KIND_CLOSING = "closing"
KIND_GREETING = "greeting"

KIND_REQUEST_GOAL = "request_goal"
KIND_NOT_SURE = "not_sure"
KIND_DENY = "deny"
KIND_CONFIRM = "confirm_answer"
KIND_THANKS = "thanks"

Template = Tuple[str, Optional[str]]


class AgentActionSpace:
    def __init__(self, kb: KnowledgeBase):
        self.kb = kb
        self.templates: List[Template] = (
            [(KIND_REQUEST, slot) for slot in GOAL_RELEVANT_SLOTS]
            + [(KIND_INFORM, slot) for slot in INFORMABLE_SLOTS]
            + [(KIND_TASKCOMPLETE, None), (KIND_CLOSING, None), (KIND_GREETING, None)]
        )
        self._index: Dict[Template, int] = {t: i for i, t in enumerate(self.templates)}

    def __len__(self) -> int:
        return len(self.templates)

    def index_of(self, kind: str, slot: Optional[str] = None) -> int:
        try:
            return self._index[(kind, slot)]
        except KeyError:
            raise ProtocolError(f"no agent action template {kind}({slot or ''})") from None

    def describe(self, index: int) -> str:
        kind, slot = self.templates[index]
        return f"{kind}({slot})" if slot else kind

    def build_act(self, index: int, state: DialogueState) -> DialogueAct:
        if not 0 <= index < len(self.templates):
            raise ProtocolError(f"agent action index out of range: {index}")
        kind, slot = self.templates[index]
        if kind == KIND_REQUEST:
            return DialogueAct(INTENT_REQUEST, {slot: UNKNOWN})
        if kind == KIND_INFORM:
            return DialogueAct(INTENT_INFORM, {slot: self.kb.value_for(slot, state.agreed)})
        if kind == KIND_TASKCOMPLETE:
            return self.booking_act(state)
        if kind == KIND_CLOSING:
            return DialogueAct(INTENT_CLOSING)
        return DialogueAct(INTENT_GREETING)

    def booking_act(self, state: DialogueState) -> DialogueAct:
        """订第一条与已商定取值一致的场次；没有则返回无票的 taskcomplete"""
        for row_index, row in enumerate(self.kb.rows):
            if all(row[k] == v for k, v in state.agreed.items() if k in row):
                slots = {SLOT_TASKCOMPLETE: "booked", SLOT_TICKET: f"ticket_{row_index}"}
                slots.update(row)
                return DialogueAct(INTENT_INFORM, slots)
        return DialogueAct(INTENT_INFORM, {SLOT_TASKCOMPLETE: NO_TICKET})


class UserActSpace:
    def __init__(self):
        self.templates: List[Template] = (
            [(KIND_GREETING, None), (KIND_REQUEST_GOAL, None)]
            + [(KIND_INFORM, slot) for slot in GOAL_RELEVANT_SLOTS]
            + [(KIND_NOT_SURE, slot) for slot in GOAL_RELEVANT_SLOTS]
            + [(KIND_DENY, slot) for slot in INFORMABLE_SLOTS]
            + [(KIND_CONFIRM, slot) for slot in INFORMABLE_SLOTS]
            + [(KIND_THANKS, None), (KIND_CLOSING, None)]
        )
        self._index: Dict[Template, int] = {t: i for i, t in enumerate(self.templates)}

    def __len__(self) -> int:
        return len(self.templates)

    def describe(self, index: int) -> str:
        kind, slot = self.templates[index]
        return f"{kind}({slot})" if slot else kind

    def index_of(self, act: DialogueAct) -> int:
        """把具体用户行为映射回模板下标；带槽位的模板取第一个槽位"""
        intent = act.intent
        if intent == INTENT_GREETING:
            return self._index[(KIND_GREETING, None)]
        if intent == INTENT_REQUEST:
            return self._index[(KIND_REQUEST_GOAL, None)]
        if intent == INTENT_THANKS:
            return self._index[(KIND_THANKS, None)]
        if intent == INTENT_CLOSING:
            return self._index[(KIND_CLOSING, None)]
        kind = {
            INTENT_INFORM: KIND_INFORM,
            INTENT_NOT_SURE: KIND_NOT_SURE,
            INTENT_DENY: KIND_DENY,
            INTENT_CONFIRM_ANSWER: KIND_CONFIRM,
        }.get(intent)
        if kind is None or not act.slots:
            raise ProtocolError(f"user act {act} has no template")
        slot = next(iter(act.slots))
        template = (kind, slot)
        if template not in self._index:
            raise ProtocolError(f"user act {act} has no template")
        return self._index[template]

    def ground(self, index: int, goal: UserGoal, state: DialogueState) -> DialogueAct:
        """用当前模拟目标与对话状态为模板填值"""
        kind, slot = self.templates[index]
        if kind == KIND_GREETING:
            return DialogueAct(INTENT_GREETING)
        if kind == KIND_REQUEST_GOAL:
            return DialogueAct(INTENT_REQUEST, {s: UNKNOWN for s in goal.request_slots})
        if kind == KIND_THANKS:
            return DialogueAct(INTENT_THANKS)
        if kind == KIND_CLOSING:
            return DialogueAct(INTENT_CLOSING)
        if kind == KIND_INFORM:
            value = goal.constraints.get(slot) or state.agreed.get(slot, UNKNOWN)
            return DialogueAct(INTENT_INFORM, {slot: value})
        if kind == KIND_NOT_SURE:
            return DialogueAct(INTENT_NOT_SURE, {slot: UNKNOWN})
        value = state.last_agent_act.slots.get(slot) or state.agreed.get(slot) or goal.constraints.get(slot, UNKNOWN)
        intent = INTENT_DENY if kind == KIND_DENY else INTENT_CONFIRM_ANSWER
        return DialogueAct(intent, {slot: value})
