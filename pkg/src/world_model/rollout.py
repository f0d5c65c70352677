"""用世界模型代替用户生成模拟对话"""

import logging
from typing import NamedTuple

import numpy as np

from src.core.interfaces import BasePolicy
from src.core.schemas import DialogueAct, DialogueRecord, EpisodeOutcome, Experience, UserGoal
from src.dialogue.actions import AgentActionSpace, UserActSpace
from src.dialogue.ontology import MAX_TURNS, SOURCE_SIMULATED, STATUS_FAILURE, STATUS_SUCCESS, TURN_PENALTY
from src.dialogue.reward import denormalize_reward, transition_reward
from src.dialogue.state import DialogueState, encode_state
from src.world_model.model import WorldModel, world_forward

logger = logging.getLogger(__name__)


class WorldResponse(NamedTuple):
    user_act: DialogueAct
    user_index: int
    reward: float
    done: bool


def world_sample_response(
    model: WorldModel,
    features: np.ndarray,
    action: int,
    rng: np.random.Generator,
    goal: UserGoal,
    state: DialogueState,
    user_acts: UserActSpace,
    max_turns: int = MAX_TURNS,
) -> WorldResponse:
    """aᵘ ~ p，done ~ Bernoulli(t̂)，终止时 r = r̂·2L，否则 r = -1

    state 应已应用本轮 agent 行为，用于为采样到的模板填值。
    """
    probs, reward_hat, term_hat = world_forward(model, features, action)
    user_index = int(rng.choice(len(probs), p=probs))
    done = bool(rng.random() < term_hat)
    reward = denormalize_reward(reward_hat, max_turns) if done else TURN_PENALTY
    user_act = user_acts.ground(user_index, goal, state)
    return WorldResponse(user_act, user_index, reward, done)


def simulate_dialogue(
    policy: BasePolicy,
    model: WorldModel,
    goal: UserGoal,
    action_space: AgentActionSpace,
    user_acts: UserActSpace,
    rng: np.random.Generator,
    dialogue_id: int = 0,
    max_turns: int = MAX_TURNS,
    explore: bool = True,
) -> DialogueRecord:
    """agent 与世界模型对话，轮数上限处强制失败终止（r = -41）"""
    state = DialogueState()
    experiences = []
    transcript = []
    done = False
    while not done:
        features = encode_state(state, max_turns)
        action = policy.act(features, state, rng, explore=explore)
        agent_act = action_space.build_act(action, state)
        state.apply_agent_act(agent_act)
        state.turn += 1
        response = world_sample_response(model, features, action, rng, goal, state, user_acts, max_turns)
        state.apply_user_act(response.user_act)
        reward, done = response.reward, response.done
        if not done and state.turn >= max_turns:
            reward, done = transition_reward(True, False, max_turns), True
        experiences.append(Experience(
            state=features,
            action=action,
            reward=reward,
            user_action=response.user_index,
            next_state=encode_state(state, max_turns),
            terminal=done,
            source=SOURCE_SIMULATED,
            dialogue_id=dialogue_id,
            position=len(experiences),
        ))
        transcript.append(("agent", agent_act))
        transcript.append(("user", response.user_act))

    total = float(sum(exp.reward for exp in experiences))
    outcome = EpisodeOutcome(
        status=STATUS_SUCCESS if experiences[-1].reward > 0 else STATUS_FAILURE,
        turns=state.turn,
        reward=total,
        category_id=goal.category_id,
    )
    return DialogueRecord(dialogue_id, goal, experiences, outcome, transcript)
