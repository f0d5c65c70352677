from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.dialogue.errors import ProtocolError
from src.dialogue.ontology import (
    INTENT_REQUEST,
    INTENTS,
    OPTIONAL_CONSTRAINT_SLOTS,
    SLOT_MOVIENAME,
    SLOT_TICKET,
    SLOTS,
    SOURCE_REAL,
    SOURCE_SIMULATED,
    STATUS_FAILURE,
    STATUS_SUCCESS,
    UNKNOWN,
)


@dataclass
class DialogueAct:
    """对话行为：意图 + 槽位取值（值可以是 UNKNOWN）"""
    intent: str
    slots: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.slots = dict(self.slots or {})
        self.validate()

    def validate(self):
        if self.intent not in INTENTS:
            raise ProtocolError(f"unknown intent: {self.intent!r}")
        for slot in self.slots:
            if slot not in SLOTS:
                raise ProtocolError(f"unknown slot: {slot!r}")
        if self.intent == INTENT_REQUEST and UNKNOWN not in self.slots.values():
            raise ProtocolError("request act must carry at least one UNKNOWN slot")

    def to_dict(self) -> Dict[str, Any]:
        return {"intent": self.intent, "slots": dict(self.slots)}

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "DialogueAct":
        return cls(intent=raw["intent"], slots=dict(raw.get("slots") or {}))

    def __str__(self) -> str:
        inner = ", ".join(f"{k}={v}" for k, v in self.slots.items())
        return f"{self.intent}({inner})"


def category_of(constraints: Dict[str, str]) -> int:
    """可选约束槽位的出现情况编码为 7 位掩码"""
    category = 0
    for bit, slot in enumerate(OPTIONAL_CONSTRAINT_SLOTS):
        if slot in constraints:
            category |= 1 << bit
    return category


def slots_of_category(category_id: int) -> Tuple[str, ...]:
    return tuple(slot for bit, slot in enumerate(OPTIONAL_CONSTRAINT_SLOTS) if category_id >> bit & 1)


@dataclass
class UserGoal:
    """用户目标：约束槽位 + 待获知槽位"""
    constraints: Dict[str, str]
    request_slots: Tuple[str, ...]
    category_id: int
    goal_id: int = -1

    def __post_init__(self):
        self.constraints = dict(self.constraints)
        self.request_slots = tuple(self.request_slots)
        if SLOT_MOVIENAME not in self.constraints:
            raise ProtocolError("goal must constrain moviename")
        if SLOT_TICKET not in self.request_slots:
            raise ProtocolError("goal must request ticket")
        extra = set(self.constraints) - set(OPTIONAL_CONSTRAINT_SLOTS) - {SLOT_MOVIENAME}
        if extra:
            raise ProtocolError(f"goal constrains non-constraint slots: {sorted(extra)}")
        if self.category_id != category_of(self.constraints):
            raise ProtocolError(
                f"category_id {self.category_id} does not match constraint mask {category_of(self.constraints)}"
            )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "goal_id": self.goal_id,
            "category_id": self.category_id,
            "constraints": dict(self.constraints),
            "request_slots": list(self.request_slots),
        }

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "UserGoal":
        return cls(
            constraints=raw["constraints"],
            request_slots=tuple(raw["request_slots"]),
            category_id=int(raw["category_id"]),
            goal_id=int(raw.get("goal_id", -1)),
        )


@dataclass
class Experience:
    """一次状态转移 (s, a, r, aᵘ, s′, terminal)，带来源标签与所在对话位置"""
    state: np.ndarray
    action: int
    reward: float
    user_action: int
    next_state: np.ndarray
    terminal: bool
    source: str = SOURCE_REAL
    dialogue_id: int = -1
    position: int = 0

    def __post_init__(self):
        if self.source not in (SOURCE_REAL, SOURCE_SIMULATED):
            raise ValueError(f"unknown experience source: {self.source!r}")

    def to_turn(self) -> "TurnRecord":
        return TurnRecord(state=self.state, action=self.action, reward=self.reward)


@dataclass
class TurnRecord:
    """切换器输入的单轮 (s, a, r)"""
    state: np.ndarray
    action: int
    reward: float


@dataclass
class EpisodeOutcome:
    status: str
    turns: int
    reward: float
    category_id: Optional[int] = None

    def __post_init__(self):
        if self.status not in (STATUS_SUCCESS, STATUS_FAILURE):
            raise ValueError(f"unknown episode status: {self.status!r}")

    @property
    def success(self) -> bool:
        return self.status == STATUS_SUCCESS

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class DialogueRecord:
    """一次完整对话的轨迹与结果"""
    dialogue_id: int
    goal: UserGoal
    experiences: List[Experience]
    outcome: EpisodeOutcome
    transcript: List[Tuple[str, DialogueAct]] = field(default_factory=list)

    def turns(self) -> List[TurnRecord]:
        return [exp.to_turn() for exp in self.experiences]


@dataclass
class EpochMetrics:
    """单个 epoch 的指标行"""
    variant: str
    seed: int
    epoch: int
    success_rate: Optional[float] = None
    avg_reward: Optional[float] = None
    avg_turns: Optional[float] = None
    real_dialogues: int = 0
    real_dialogues_total: int = 0
    rbs_dialogues: int = 0
    validation_dialogues_total: int = 0
    simulated_dialogues: int = 0
    simulated_dialogues_total: int = 0
    real_experiences_total: int = 0
    simulated_experiences_total: int = 0
    agent_updates_total: int = 0
    experiences_used_total: int = 0
    agent_loss: Optional[float] = None
    world_model_loss: Optional[float] = None
    switcher_loss: Optional[float] = None
    switcher_real_score: Optional[float] = None
    switcher_sim_score: Optional[float] = None
    planning_exit: str = "none"
    quality_threshold: Optional[float] = None
    validation_success_rate: Optional[float] = None
    category_failure_rates: List[float] = field(default_factory=list)
    category_counts: List[int] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "EpochMetrics":
        allowed_fields = set(cls.__dataclass_fields__.keys())
        normalized = {k: v for k, v in (raw or {}).items() if k in allowed_fields}
        return cls(**normalized)
