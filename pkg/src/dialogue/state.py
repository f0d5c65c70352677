"""对话状态追踪与定长编码"""

import copy
from dataclasses import dataclass, field
from typing import Dict, Optional, Set

import numpy as np

from src.core.schemas import DialogueAct
from src.dialogue.ontology import (
    INTENT_CLOSING,
    INTENT_GREETING,
    INTENT_INFORM,
    INTENT_REQUEST,
    INTENTS,
    MAX_TURNS,
    NO_TICKET,
    SLOT_TASKCOMPLETE,
    SLOT_TICKET,
    SLOTS,
    UNKNOWN,
)

STATE_DIM = 2 * len(INTENTS) + 4 * len(SLOTS) + 1

_INTENT_INDEX = {intent: i for i, intent in enumerate(INTENTS)}
_SLOT_INDEX = {slot: i for i, slot in enumerate(SLOTS)}


def is_booking_act(act: DialogueAct) -> bool:
    return act.intent == INTENT_INFORM and SLOT_TASKCOMPLETE in act.slots


def is_terminal_agent_act(act: DialogueAct) -> bool:
    return act.intent == INTENT_CLOSING or is_booking_act(act)


@dataclass
class DialogueState:
    turn: int = 0
    last_user_act: DialogueAct = field(default_factory=lambda: DialogueAct(INTENT_GREETING))
    last_agent_act: DialogueAct = field(default_factory=lambda: DialogueAct(INTENT_GREETING))
    user_informed: Set[str] = field(default_factory=set)
    user_requested: Set[str] = field(default_factory=set)
    agent_informed: Set[str] = field(default_factory=set)
    agent_requested: Set[str] = field(default_factory=set)
    agreed: Dict[str, str] = field(default_factory=dict)
    ticket_issued: bool = False
    booked_row: Optional[Dict[str, str]] = None

    def apply_agent_act(self, act: DialogueAct):
        """agent 的 inform 会覆盖已商定取值；订票行为整行写入"""
        self.last_agent_act = act
        if act.intent == INTENT_REQUEST:
            self.agent_requested.update(act.slots)
        elif act.intent == INTENT_INFORM:
            for slot, value in act.slots.items():
                self.agent_informed.add(slot)
                if slot not in (SLOT_TASKCOMPLETE, SLOT_TICKET) and value != UNKNOWN:
                    self.agreed[slot] = value
            if is_booking_act(act) and act.slots[SLOT_TASKCOMPLETE] != NO_TICKET:
                self.ticket_issued = True
                self.booked_row = {k: v for k, v in act.slots.items() if k not in (SLOT_TASKCOMPLETE, SLOT_TICKET)}

    def apply_user_act(self, act: DialogueAct):
        self.last_user_act = act
        if act.intent == INTENT_INFORM:
            for slot, value in act.slots.items():
                self.user_informed.add(slot)
                if value != UNKNOWN:
                    self.agreed[slot] = value
        elif act.intent == INTENT_REQUEST:
            self.user_requested.update(slot for slot, value in act.slots.items() if value == UNKNOWN)

    def copy(self) -> "DialogueState":
        return copy.deepcopy(self)


def _slot_bits(slots: Set[str]) -> np.ndarray:
    bits = np.zeros(len(SLOTS))
    for slot in slots:
        bits[_SLOT_INDEX[slot]] = 1.0
    return bits


def encode_state(state: DialogueState, max_turns: int = MAX_TURNS) -> np.ndarray:
    """[上一轮用户意图 | 上一轮 agent 意图 | 用户已告知 | 用户请求 | agent 已告知 | agent 请求 | t/L]"""
    user_intent = np.zeros(len(INTENTS))
    user_intent[_INTENT_INDEX[state.last_user_act.intent]] = 1.0
    agent_intent = np.zeros(len(INTENTS))
    agent_intent[_INTENT_INDEX[state.last_agent_act.intent]] = 1.0
    return np.concatenate([
        user_intent,
        agent_intent,
        _slot_bits(state.user_informed),
        _slot_bits(state.user_requested),
        _slot_bits(state.agent_informed),
        _slot_bits(state.agent_requested),
        [state.turn / float(max_turns)],
    ])
