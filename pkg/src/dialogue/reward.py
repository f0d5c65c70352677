"""奖励方案：每轮 -1，成功 +2L，失败 -L"""

from src.dialogue.ontology import EVENT_FAILURE, EVENT_NONTERMINAL, EVENT_SUCCESS, MAX_TURNS, TURN_PENALTY


def compute_reward(event: str, max_turns: int = MAX_TURNS) -> float:
    if event == EVENT_NONTERMINAL:
        return TURN_PENALTY
    if event == EVENT_SUCCESS:
        return 2.0 * max_turns
    if event == EVENT_FAILURE:
        return -float(max_turns)
    raise ValueError(f"unknown reward event: {event!r}")


def episode_reward(success: bool, turns: int, max_turns: int = MAX_TURNS) -> float:
    """T 轮对话的累计奖励：前 T-1 轮各 -1，加终止奖励"""
    bonus = compute_reward(EVENT_SUCCESS if success else EVENT_FAILURE, max_turns)
    return (turns - 1) * TURN_PENALTY + bonus


def transition_reward(done: bool, success: bool = False, max_turns: int = MAX_TURNS) -> float:
    """单条经验携带的奖励，终止转移把本轮 -1 与终止奖励合并（79 / -41）"""
    if not done:
        return TURN_PENALTY
    return TURN_PENALTY + compute_reward(EVENT_SUCCESS if success else EVENT_FAILURE, max_turns)


def normalize_reward(reward: float, max_turns: int = MAX_TURNS) -> float:
    return reward / (2.0 * max_turns)


def denormalize_reward(value: float, max_turns: int = MAX_TURNS) -> float:
    return value * (2.0 * max_turns)
