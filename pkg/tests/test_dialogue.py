import numpy as np
import pytest

from src.core.interfaces import BasePolicy
from src.core.schemas import DialogueAct, UserGoal, category_of, slots_of_category
from src.dialogue.actions import KIND_INFORM, KIND_REQUEST, KIND_TASKCOMPLETE, AgentActionSpace, UserActSpace
from src.dialogue.errors import GoalGenerationError, ProtocolError
from src.dialogue.goals import GoalCorpus, generate_goal_corpus
from src.dialogue.knowledge_base import KnowledgeBase
from src.dialogue.ontology import (
    EVENT_FAILURE,
    EVENT_NONTERMINAL,
    EVENT_SUCCESS,
    INTENT_CLOSING,
    INTENT_CONFIRM_ANSWER,
    INTENT_DENY,
    INTENT_GREETING,
    INTENT_INFORM,
    INTENT_NOT_SURE,
    INTENT_REQUEST,
    INTENT_THANKS,
    INTENTS,
    NUM_CATEGORIES,
    SLOT_CITY,
    SLOT_DATE,
    SLOT_MOVIENAME,
    SLOT_PRICE,
    SLOT_TICKET,
    SLOTS,
    UNKNOWN,
)
from src.dialogue.reward import compute_reward, episode_reward, transition_reward
from src.dialogue.runner import RuleAgent, run_dialogue
from src.dialogue.state import STATE_DIM, DialogueState, encode_state
from src.dialogue.user import RuleUserSimulator, check_success


class RandomPolicy(BasePolicy):
    def __init__(self, n_actions):
        self.n_actions = n_actions

    def act(self, features, state, rng, explore=False):
        return int(rng.integers(self.n_actions))


def goal_with(corpus, *slots):
    return corpus.bucket(category_of({slot: "x" for slot in slots}))[0]


# ---- acts and goals ----

def test_act_schema_is_enforced():
    with pytest.raises(ProtocolError):
        DialogueAct("shout")
    with pytest.raises(ProtocolError):
        DialogueAct(INTENT_INFORM, {"color": "red"})
    with pytest.raises(ProtocolError):
        DialogueAct(INTENT_REQUEST, {SLOT_CITY: "seattle"})
    assert str(DialogueAct(INTENT_REQUEST, {SLOT_TICKET: UNKNOWN})) == "request(ticket=UNK)"
    assert len(INTENTS) == 11 and len(SLOTS) == 16


def test_category_bitmask():
    assert category_of({SLOT_MOVIENAME: "race", SLOT_CITY: "seattle", SLOT_DATE: "friday"}) == 3
    for category in range(NUM_CATEGORIES):
        present = {slot: "v" for slot in slots_of_category(category)}
        assert category_of(present) == category


def test_goal_requires_moviename_and_ticket():
    with pytest.raises(ProtocolError):
        UserGoal({SLOT_CITY: "seattle"}, (SLOT_TICKET,), 1)
    with pytest.raises(ProtocolError):
        UserGoal({SLOT_MOVIENAME: "race"}, (SLOT_PRICE,), 0)
    with pytest.raises(ProtocolError):
        UserGoal({SLOT_MOVIENAME: "race"}, (SLOT_TICKET,), 5)


def test_goal_corpus_is_reproducible(kb):
    first = [g.to_dict() for g in generate_goal_corpus(kb, seed=3, size=200)]
    second = [g.to_dict() for g in generate_goal_corpus(kb, seed=3, size=200)]
    assert first == second


def test_stratified_corpus_covers_every_category_once(kb):
    goals = generate_goal_corpus(kb, seed=5, size=128)
    assert sorted(g.category_id for g in goals) == list(range(NUM_CATEGORIES))


def test_corpus_goals_are_satisfiable(kb, corpus):
    assert corpus.covered_categories() == list(range(NUM_CATEGORIES))
    corpus.check_against(kb)
    for goal in corpus.goals:
        assert SLOT_TICKET in goal.request_slots
        assert kb.find_rows(goal.constraints)


def test_corpus_size_below_category_count_fails(kb):
    with pytest.raises(GoalGenerationError):
        generate_goal_corpus(kb, seed=0, size=100)


def test_kb_and_corpus_round_trip(tmp_path, kb, corpus):
    kb.save(str(tmp_path / "kb.json"))
    corpus.save(str(tmp_path / "goals.json"))
    kb2 = KnowledgeBase.load(str(tmp_path / "kb.json"))
    corpus2 = GoalCorpus.load(str(tmp_path / "goals.json"))
    assert kb2.rows == kb.rows
    assert [g.to_dict() for g in corpus2.goals] == [g.to_dict() for g in corpus.goals]


def test_kb_rejects_incomplete_rows(kb):
    row = dict(kb.rows[0])
    del row[SLOT_CITY]
    with pytest.raises(GoalGenerationError):
        KnowledgeBase([row])


# ---- state encoding ----

def test_initial_state_encoding():
    vec = encode_state(DialogueState())
    assert vec.shape == (STATE_DIM,) == (2 * 11 + 4 * 16 + 1,)
    greeting = INTENTS.index(INTENT_GREETING)
    expected = np.zeros(STATE_DIM)
    expected[greeting] = 1.0
    expected[len(INTENTS) + greeting] = 1.0
    np.testing.assert_array_equal(vec, expected)


def test_encoding_is_deterministic_and_tracks_user_inform():
    state = DialogueState()
    before = encode_state(state)
    np.testing.assert_array_equal(before, encode_state(state))
    state.apply_user_act(DialogueAct(INTENT_INFORM, {SLOT_MOVIENAME: "race"}))
    after = encode_state(state)
    informed_block = slice(2 * len(INTENTS), 2 * len(INTENTS) + len(SLOTS))
    diff = after[informed_block] - before[informed_block]
    expected = np.zeros(len(SLOTS))
    expected[SLOTS.index(SLOT_MOVIENAME)] = 1.0
    np.testing.assert_array_equal(diff, expected)
    np.testing.assert_array_equal(after[informed_block.stop:], before[informed_block.stop:])


# ---- rewards ----

def test_reward_scheme():
    assert compute_reward(EVENT_NONTERMINAL) == -1.0
    assert compute_reward(EVENT_SUCCESS) == 80.0
    assert compute_reward(EVENT_FAILURE) == -40.0
    assert episode_reward(True, 11) == 70.0
    assert transition_reward(True, True) == 79.0
    assert transition_reward(True, False) == -41.0
    with pytest.raises(ValueError):
        compute_reward("bonus")


# ---- rule user ----

def test_user_informs_requested_goal_slot(corpus):
    goal = corpus.bucket(0)[0]
    user = RuleUserSimulator()
    assert user.reset(goal).intent == INTENT_GREETING
    turn = user.step(DialogueAct(INTENT_REQUEST, {SLOT_MOVIENAME: UNKNOWN}))
    assert turn.user_act == DialogueAct(INTENT_INFORM, {SLOT_MOVIENAME: goal.constraints[SLOT_MOVIENAME]})
    assert not turn.done


def test_user_not_sure_for_unconstrained_slot(corpus):
    user = RuleUserSimulator()
    user.reset(corpus.bucket(0)[0])
    turn = user.step(DialogueAct(INTENT_REQUEST, {SLOT_CITY: UNKNOWN}))
    assert turn.user_act.intent == INTENT_NOT_SURE


def test_user_greeted_states_request(corpus):
    goal = corpus.bucket(0)[0]
    user = RuleUserSimulator()
    user.reset(goal)
    turn = user.step(DialogueAct(INTENT_GREETING))
    assert turn.user_act.intent == INTENT_REQUEST
    assert set(turn.user_act.slots) == set(goal.request_slots)


def test_user_denies_conflicting_inform_and_confirms_consistent(kb, corpus):
    goal = goal_with(corpus, SLOT_DATE)
    wrong = next(d for d in kb.vocab[SLOT_DATE] if d != goal.constraints[SLOT_DATE])
    user = RuleUserSimulator()
    user.reset(goal)
    assert user.step(DialogueAct(INTENT_INFORM, {SLOT_DATE: wrong})).user_act.intent == INTENT_DENY
    right = DialogueAct(INTENT_INFORM, {SLOT_DATE: goal.constraints[SLOT_DATE]})
    assert user.step(right).user_act.intent == INTENT_CONFIRM_ANSWER


def test_user_thanks_for_requested_slot(corpus):
    goal = next(g for g in corpus.goals if SLOT_PRICE in g.request_slots)
    user = RuleUserSimulator()
    user.reset(goal)
    assert user.step(DialogueAct(INTENT_INFORM, {SLOT_PRICE: "12"})).user_act.intent == INTENT_THANKS


def test_wrong_date_then_booking_fails(kb, corpus):
    goal = goal_with(corpus, SLOT_DATE)
    wrong = next(d for d in kb.vocab[SLOT_DATE] if d != goal.constraints[SLOT_DATE])
    space = AgentActionSpace(kb)
    user = RuleUserSimulator()
    user.reset(goal)
    user.step(DialogueAct(INTENT_INFORM, {SLOT_DATE: wrong}))
    turn = user.step(space.booking_act(user.state))
    assert turn.done
    assert not turn.outcome.success
    assert turn.outcome.turns == 2


def test_turn_cap_ends_in_failure(corpus):
    user = RuleUserSimulator()
    user.reset(corpus.bucket(5)[0])
    for _ in range(39):
        assert not user.step(DialogueAct(INTENT_GREETING)).done
    turn = user.step(DialogueAct(INTENT_GREETING))
    assert turn.done
    assert turn.outcome.turns == 40
    assert turn.outcome.reward == -40.0 - 39.0
    with pytest.raises(ProtocolError):
        user.step(DialogueAct(INTENT_GREETING))


def test_closing_without_ticket_fails(corpus):
    user = RuleUserSimulator()
    user.reset(corpus.bucket(0)[0])
    turn = user.step(DialogueAct(INTENT_CLOSING))
    assert turn.done and not turn.outcome.success
    assert turn.user_act.intent == INTENT_CLOSING


def test_out_of_schema_agent_act_is_rejected(corpus):
    user = RuleUserSimulator()
    user.reset(corpus.bucket(0)[0])
    act = DialogueAct(INTENT_INFORM, {SLOT_CITY: "seattle"})
    act.slots["color"] = "red"
    with pytest.raises(ProtocolError):
        user.step(act)


def test_check_success_rules(kb, corpus):
    goal = goal_with(corpus, SLOT_CITY)
    row = kb.find_rows(goal.constraints)[0]
    state = DialogueState(ticket_issued=True, agreed=dict(row), agent_informed=set(row) | {SLOT_TICKET})
    assert check_success(state, goal)

    wrong_city = next(c for c in kb.vocab[SLOT_CITY] if c != goal.constraints[SLOT_CITY])
    mismatched = state.copy()
    mismatched.agreed[SLOT_CITY] = wrong_city
    assert not check_success(mismatched, goal)

    not_informed = state.copy()
    not_informed.agent_informed.discard(SLOT_TICKET)
    assert not check_success(not_informed, goal)

    no_ticket = state.copy()
    no_ticket.ticket_issued = False
    assert not check_success(no_ticket, goal)


# ---- action spaces and runner ----

def test_action_space_sizes(kb):
    space = AgentActionSpace(kb)
    assert len(space) == 23
    assert len(UserActSpace()) == 44
    assert space.describe(space.index_of(KIND_REQUEST, SLOT_DATE)) == "request(date)"
    with pytest.raises(ProtocolError):
        space.index_of(KIND_INFORM, SLOT_TICKET)
    with pytest.raises(ProtocolError):
        UserActSpace().index_of(DialogueAct(INTENT_INFORM, {SLOT_PRICE: "12"}))


def test_inform_uses_first_consistent_row(kb):
    space = AgentActionSpace(kb)
    state = DialogueState(agreed={SLOT_CITY: kb.rows[3][SLOT_CITY]})
    act = space.build_act(space.index_of(KIND_INFORM, SLOT_PRICE), state)
    assert act.slots[SLOT_PRICE] == kb.first_consistent(state.agreed)[SLOT_PRICE]


def test_rule_agent_always_succeeds(domain, rng):
    agent = RuleAgent(domain.action_space)
    user = domain.new_user()
    for category in range(NUM_CATEGORIES):
        goal = domain.corpus.bucket(category)[0]
        record = run_dialogue(agent, user, goal, domain.action_space, domain.user_acts, rng)
        assert record.outcome.success
        assert record.outcome.turns <= 2 * 16 + 2
        assert record.outcome.reward == 80.0 - (record.outcome.turns - 1)
        assert record.experiences[-1].reward == 79.0


def test_rule_agent_books_on_ninth_turn(domain, rng):
    agent = RuleAgent(domain.action_space)
    record = run_dialogue(agent, domain.new_user(), domain.corpus.bucket(0)[0], domain.action_space,
                          domain.user_acts, rng)
    assert record.outcome.turns == 9
    last_agent_act = record.transcript[-2][1]
    assert domain.action_space.index_of(KIND_TASKCOMPLETE) == len(domain.action_space) - 3
    assert last_agent_act.slots["taskcomplete"] == "booked"


def test_random_policy_episodes_respect_reward_accounting(domain):
    rng = np.random.default_rng(42)
    policy = RandomPolicy(domain.n_actions)
    user = domain.new_user()
    for i in range(40):
        goal = domain.corpus.uniform(rng)
        record = run_dialogue(policy, user, goal, domain.action_space, domain.user_acts, rng, dialogue_id=i)
        outcome = record.outcome
        assert 1 <= outcome.turns <= 40
        bonus = 80.0 if outcome.success else -40.0
        assert outcome.reward == bonus - (outcome.turns - 1)
        assert sum(e.reward for e in record.experiences) == outcome.reward - 1.0
        assert [e.position for e in record.experiences] == list(range(outcome.turns))
        assert all(not e.terminal for e in record.experiences[:-1]) and record.experiences[-1].terminal


def test_simulator_is_deterministic(domain):
    policy = RandomPolicy(domain.n_actions)
    goal = domain.corpus.bucket(9)[0]
    runs = [
        run_dialogue(policy, domain.new_user(), goal, domain.action_space, domain.user_acts,
                     np.random.default_rng(3))
        for _ in range(2)
    ]
    assert [str(a) for _, a in runs[0].transcript] == [str(a) for _, a in runs[1].transcript]
