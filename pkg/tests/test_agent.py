import numpy as np
import pytest

from src.agent.dqn import (
    STATUS_EMPTY,
    STATUS_OK,
    DQNAgent,
    evaluate_policy,
    rbs_warm_start,
    select_action,
    sync_target,
    td_targets,
)
from src.agent.q_network import QNetwork
from src.agent.replay_buffer import BufferSourceError, ReplayBuffer, sample_union
from src.core.schemas import Experience
from src.dialogue.ontology import SOURCE_REAL, SOURCE_SIMULATED
from src.dialogue.runner import RuleAgent
from src.nn.dense import DenseLayer


def constant_q(values, state_dim=2) -> QNetwork:
    values = np.asarray(values, dtype=float)
    return QNetwork([DenseLayer(np.zeros((values.size, state_dim)), values, "identity")], name="q")


def linear_q(n_actions=3) -> QNetwork:
    return QNetwork([DenseLayer(np.zeros((n_actions, 1)), np.zeros(n_actions), "identity")], name="q")


def exp(reward, terminal=True, action=0, state=None, source=SOURCE_REAL, dialogue_id=0, position=0):
    state = np.array([1.0]) if state is None else state
    return Experience(
        state=state, action=action, reward=reward, user_action=0, next_state=state,
        terminal=terminal, source=source, dialogue_id=dialogue_id, position=position,
    )


# ---- action selection ----

def test_greedy_picks_argmax(rng):
    assert select_action(constant_q([1.0, 3.0, 2.0]), np.zeros(2), 0.0, rng) == 1


def test_greedy_tie_breaks_to_lowest_index(rng):
    assert select_action(constant_q([5.0, 5.0, 0.0]), np.zeros(2), 0.0, rng) == 0


def test_full_exploration_is_uniform(rng):
    q = constant_q([0.0, 9.0, 0.0])
    draws = np.array([select_action(q, np.zeros(2), 1.0, rng) for _ in range(30000)])
    freqs = np.bincount(draws, minlength=3) / draws.size
    np.testing.assert_allclose(freqs, 1 / 3, atol=0.02)


def test_epsilon_out_of_range(rng):
    with pytest.raises(ValueError):
        select_action(constant_q([0.0]), np.zeros(2), 1.5, rng)


# ---- targets ----

def test_td_targets():
    q_target = constant_q([10.0, 2.0, 3.0], state_dim=1)
    batch = [exp(80.0, terminal=True), exp(-1.0, terminal=False)]
    np.testing.assert_allclose(td_targets(batch, q_target, 0.9), [80.0, 8.0])
    np.testing.assert_allclose(td_targets(batch, q_target, 0.0), [80.0, -1.0])


# ---- training ----

def test_train_step_on_empty_buffers_is_noop(rng):
    agent = DQNAgent(linear_q())
    result = agent.train_step([ReplayBuffer(10), ReplayBuffer(10, SOURCE_SIMULATED)], rng)
    assert result.status == STATUS_EMPTY
    assert agent.updates == 0


def test_train_step_at_fixed_point_changes_nothing(rng):
    q = constant_q([5.0, 0.0, 0.0], state_dim=1)
    agent = DQNAgent(q)
    buffer = ReplayBuffer(10)
    buffer.push(exp(5.0, terminal=True, action=0))
    before = {name: p.copy() for name, p in q.parameters().items()}
    result = agent.train_step([buffer], rng)
    assert result.status == STATUS_OK
    assert result.loss == 0.0
    for name, p in q.parameters().items():
        np.testing.assert_array_equal(p, before[name])


def test_train_step_reports_pre_update_mse(rng):
    q = QNetwork.create(1, 3, hidden_size=4, rng=rng)
    agent = DQNAgent(q)
    buffer = ReplayBuffer(10)
    buffer.push(exp(2.0, terminal=True, action=1))
    expected = (2.0 - q.q_values(np.array([1.0]))[1]) ** 2
    result = agent.train_step([buffer], rng)
    assert result.loss == pytest.approx(expected)
    assert result.grad_norm <= 1.0 + 1e-9


def test_single_transition_regression_converges(rng):
    agent = DQNAgent(linear_q(), learning_rate=0.001)
    buffer = ReplayBuffer(10)
    buffer.push(exp(1.0, terminal=True, action=2))
    target_before = agent.q_target.q_values(np.array([1.0])).copy()
    for _ in range(2000):
        agent.train_step([buffer], rng)
    assert agent.q.q_values(np.array([1.0]))[2] == pytest.approx(1.0, abs=1e-2)
    np.testing.assert_array_equal(agent.q_target.q_values(np.array([1.0])), target_before)


def test_sync_target_is_a_value_copy(rng):
    q = QNetwork.create(4, 3, hidden_size=5, rng=rng)
    target = sync_target(q)
    states = rng.normal(size=(6, 4))
    np.testing.assert_array_equal(target.q_values(states), q.q_values(states))
    q.layers[0].weight += 1.0
    q.mark_updated()
    assert not np.array_equal(target.q_values(states), q.q_values(states))
    np.testing.assert_array_equal(sync_target(target).q_values(states), target.q_values(states))


def test_agent_checkpoint_round_trip(tmp_path, rng):
    agent = DQNAgent(QNetwork.create(5, 4, hidden_size=6, rng=rng))
    path = agent.save(str(tmp_path / "q.json"), {"epoch": 7})
    restored = DQNAgent.load(path)
    states = rng.normal(size=(3, 5))
    np.testing.assert_array_equal(restored.q.q_values(states), agent.q.q_values(states))


# ---- replay buffers ----

def test_buffer_is_fifo():
    buffer = ReplayBuffer(5)
    for i in range(8):
        buffer.push(exp(float(i), dialogue_id=i // 3, position=i % 3))
    assert len(buffer) == 5
    assert [e.reward for e in buffer] == [3.0, 4.0, 5.0, 6.0, 7.0]
    assert buffer.dialogue_ids() == [1, 2]
    assert [e.reward for e in buffer.prefix(buffer[2])] == [3.0, 4.0, 5.0]


def test_prefix_keeps_evicted_leading_turns():
    buffer = ReplayBuffer(4)
    buffer.extend([exp(float(t), dialogue_id=0, position=t) for t in range(3)])
    buffer.extend([exp(10.0 + t, dialogue_id=1, position=t) for t in range(3)])
    assert [(e.dialogue_id, e.position) for e in buffer] == [(0, 2), (1, 0), (1, 1), (1, 2)]
    assert [e.position for e in buffer.prefix(buffer[0])] == [0, 1, 2]
    assert [e.reward for e in buffer.prefix(buffer[0])] == [0.0, 1.0, 2.0]

    buffer.push(exp(20.0, dialogue_id=2, position=0))
    assert buffer.dialogue_ids() == [1, 2]
    assert buffer.dialogue(0) == []


def test_prefix_survives_eviction_within_one_dialogue():
    buffer = ReplayBuffer(1)
    for t in range(3):
        buffer.push(exp(float(t), dialogue_id=5, position=t))
    assert len(buffer) == 1
    assert [e.position for e in buffer.prefix(buffer[0])] == [0, 1, 2]


def test_history_must_belong_to_the_dialogue():
    buffer = ReplayBuffer(5)
    with pytest.raises(ValueError):
        buffer.push(exp(0.0, dialogue_id=1), history=[exp(0.0, dialogue_id=2)])
    assert len(buffer) == 0


def test_buffer_rejects_foreign_source():
    with pytest.raises(BufferSourceError):
        ReplayBuffer(5, SOURCE_REAL).push(exp(0.0, source=SOURCE_SIMULATED))


def test_union_sampling_is_proportional(rng):
    real = ReplayBuffer(100)
    sim = ReplayBuffer(300, SOURCE_SIMULATED)
    real.extend([exp(0.0) for _ in range(100)])
    sim.extend([exp(0.0, source=SOURCE_SIMULATED) for _ in range(300)])
    fractions = []
    for _ in range(10000):
        batch = sample_union([real, sim], 16, rng)
        fractions.append(np.mean([e.source == SOURCE_SIMULATED for e in batch]))
    assert np.mean(fractions) == pytest.approx(0.75, abs=0.03)


# ---- warm start and evaluation ----

def test_rbs_warm_start_fills_buffer(domain):
    buffer = ReplayBuffer(2000)
    records = rbs_warm_start(
        RuleAgent(domain.action_space), domain.new_user(), domain.corpus.goals, buffer,
        domain.action_space, domain.user_acts, np.random.default_rng(5), n_dialogues=50,
    )
    assert len(records) == 50
    assert len(buffer) == sum(r.outcome.turns for r in records)
    assert all(r.outcome.success for r in records)


def test_rbs_warm_start_is_deterministic(domain):
    buffers = []
    for _ in range(2):
        buffer = ReplayBuffer(2000)
        rbs_warm_start(
            RuleAgent(domain.action_space), domain.new_user(), domain.corpus.goals, buffer,
            domain.action_space, domain.user_acts, np.random.default_rng(9), n_dialogues=10,
        )
        buffers.append(buffer)
    assert len(buffers[0]) == len(buffers[1])
    for a, b in zip(buffers[0], buffers[1]):
        assert np.array_equal(a.state, b.state) and a.action == b.action and a.reward == b.reward


def test_evaluate_rule_agent(domain, rng):
    goals = domain.corpus.goals[:20]
    result = evaluate_policy(RuleAgent(domain.action_space), domain.new_user(), goals,
                             domain.action_space, domain.user_acts, rng)
    assert result.success_rate == 1.0
    assert result.avg_turns == 9.0
    assert result.avg_reward == 72.0
