"""人工评测对话 REPL：真人扮演用户，按给定目标与已训练策略对话"""

import json
import logging
import os
import re
from typing import Callable, Dict, Optional

import numpy as np

from src.agent.dqn import DQNAgent
from src.core.factory import PipelineFactory
from src.core.interfaces import BasePolicy
from src.core.schemas import DialogueAct, EpisodeOutcome, UserGoal
from src.dialogue.actions import UserActSpace
from src.dialogue.errors import ProtocolError
from src.dialogue.ontology import (
    INTENT_CLOSING,
    INTENT_CONFIRM_ANSWER,
    INTENT_DENY,
    INTENT_INFORM,
    INTENT_NOT_SURE,
    INTENT_REQUEST,
    INTENT_THANKS,
    MAX_TURNS,
    UNKNOWN,
)
from src.dialogue.runner import run_dialogue
from src.dialogue.user import TrackedUser
from src.utils.config_loader import RunConfig

logger = logging.getLogger(__name__)

ABANDON_COMMAND = "abandon"
HELP_COMMAND = "help"
HUMAN_EVAL_LOG = "human_eval.jsonl"
USER_INTENTS = (
    INTENT_INFORM,
    INTENT_NOT_SURE,
    INTENT_DENY,
    INTENT_CONFIRM_ANSWER,
    INTENT_REQUEST,
    INTENT_THANKS,
    INTENT_CLOSING,
)
UNKNOWN_TOKENS = {UNKNOWN, "?", ""}

_ACT_PATTERN = re.compile(r"^\s*([A-Za-z_]+)\s*(?:\((.*)\))?\s*$")

InputFn = Callable[[str], str]
OutputFn = Callable[[str], None]


def parse_user_act(text: str) -> DialogueAct:
    """解析 intent(slot=value, ...)；只写槽位名或值为 ? 时取 UNK"""
    match = _ACT_PATTERN.match(text or "")
    if not match:
        raise ProtocolError(f"cannot parse {text!r}; expected intent(slot=value, ...)")
    intent, body = match.group(1).lower(), match.group(2)
    if intent not in USER_INTENTS:
        raise ProtocolError(f"unknown user intent: {intent!r}")
    slots: Dict[str, str] = {}
    for part in (body or "").split(","):
        part = part.strip()
        if not part:
            continue
        slot, _, value = part.partition("=")
        value = value.strip()
        slots[slot.strip()] = UNKNOWN if value in UNKNOWN_TOKENS else value
    return DialogueAct(intent, slots)


def format_goal(goal: UserGoal) -> str:
    constraints = ", ".join(f"{k}={v}" for k, v in goal.constraints.items())
    return f"目标（类别 {goal.category_id}）: 约束 [{constraints}]，需要获知 [{', '.join(goal.request_slots)}]"


def usage_hint() -> str:
    return (
        f"可用意图: {', '.join(USER_INTENTS)}；格式 intent(slot=value, ...)，"
        f"例如 inform(city=seattle) / not_sure(date)；输入 {ABANDON_COMMAND} 放弃对话"
    )


class HumanUser(TrackedUser):
    """从终端读取用户行为；放弃、EOF 均按失败结束，非法输入重新提示且不推进轮次"""

    def __init__(
        self,
        input_fn: InputFn = input,
        output_fn: OutputFn = print,
        user_acts: Optional[UserActSpace] = None,
        max_turns: int = MAX_TURNS,
    ):
        super().__init__(max_turns=max_turns)
        self.input_fn = input_fn
        self.output_fn = output_fn
        self.user_acts = user_acts or UserActSpace()
        self.invalid_inputs = 0

    def respond(self, agent_act: DialogueAct) -> Optional[DialogueAct]:
        self.output_fn(f"[第 {self.state.turn} 轮] Agent: {agent_act}")
        while True:
            try:
                line = self.input_fn("你> ")
            except EOFError:
                return None
            line = (line or "").strip()
            if line.lower() == ABANDON_COMMAND:
                return None
            if line.lower() == HELP_COMMAND:
                self.output_fn(usage_hint())
                continue
            try:
                act = parse_user_act(line)
                self.user_acts.index_of(act)
            except ProtocolError as e:
                self.invalid_inputs += 1
                self.output_fn(f"无效输入: {e}")
                self.output_fn(usage_hint())
                continue
            return act


def append_log(log_path: str, entry: Dict) -> str:
    os.makedirs(os.path.dirname(log_path) or ".", exist_ok=True)
    with open(log_path, "a", encoding="utf-8") as f:
        f.write(json.dumps(entry, ensure_ascii=False) + "\n")
    return log_path


def chat_repl(
    checkpoint_path: Optional[str],
    seed: int,
    config: Optional[RunConfig] = None,
    input_fn: InputFn = input,
    output_fn: OutputFn = print,
    log_path: Optional[str] = None,
    policy: Optional[BasePolicy] = None,
    goal: Optional[UserGoal] = None,
    agent_name: Optional[str] = None,
) -> EpisodeOutcome:
    """抽取一个用户目标，与策略对话一次并把结果追加到人工评测日志"""
    config = config or RunConfig()
    domain = PipelineFactory.create_domain(config)
    if policy is None:
        if not checkpoint_path:
            raise ValueError("chat needs a policy checkpoint")
        policy = DQNAgent.load(checkpoint_path)
    rng = np.random.default_rng(seed)
    goal = goal or domain.corpus.uniform(rng)

    output_fn(format_goal(goal))
    output_fn(usage_hint())
    user = HumanUser(input_fn=input_fn, output_fn=output_fn, user_acts=domain.user_acts, max_turns=domain.max_turns)
    record = run_dialogue(
        policy, user, goal, domain.action_space, domain.user_acts, rng,
        dialogue_id=seed, max_turns=domain.max_turns,
    )
    outcome = record.outcome
    final_agent_act = record.transcript[-2][1]
    output_fn(f"[第 {outcome.turns} 轮] Agent: {final_agent_act}")
    output_fn(f"对话结束: {outcome.status}，{outcome.turns} 轮，奖励 {outcome.reward:.1f}")

    log_path = log_path or os.path.join(config.output_dir, HUMAN_EVAL_LOG)
    append_log(log_path, {
        "agent": agent_name or (os.path.basename(checkpoint_path) if checkpoint_path else "policy"),
        "seed": seed,
        "category_id": goal.category_id,
        "success": outcome.success,
        "turns": outcome.turns,
        "reward": outcome.reward,
    })
    logger.info(f"人工评测结果已追加到 {log_path}")
    return outcome
