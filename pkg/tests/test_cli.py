import io
import json
import os

import numpy as np
import pandas as pd
import pytest
from scipy.stats import hypergeom

import switch_ddq
from src.cli.chat import HumanUser, chat_repl, parse_user_act
from src.cli.export import (
    RUNS_DIR,
    SUMMARY_FILE,
    TABLE_FILE,
    UPDATES_FILE,
    category_table,
    export_metrics,
    summarize,
)
from src.cli.permutation import (
    PermutationTestError,
    exact_p_value,
    load_outcomes,
    permutation_test,
)
from src.core.schemas import DialogueAct, EpochMetrics
from src.dialogue.errors import ProtocolError
from src.dialogue.ontology import (
    GOAL_RELEVANT_SLOTS,
    INTENT_INFORM,
    INTENT_NOT_SURE,
    INTENT_REQUEST,
    NUM_CATEGORIES,
    STATUS_FAILURE,
    STATUS_SUCCESS,
    UNKNOWN,
)
from src.dialogue.runner import RuleAgent
from src.pipeline.experiment import learning_curve
from src.pipeline.trainer import RunResult
from src.utils.config_loader import RunConfig


def scripted(lines):
    """按顺序返回预设输入，用完后模拟 EOF"""
    remaining = list(lines)

    def read(prompt=""):
        if not remaining:
            raise EOFError
        return remaining.pop(0)

    return read


def oracle_script(goal):
    return [
        f"inform({slot}={goal.constraints[slot]})" if slot in goal.constraints else f"not_sure({slot})"
        for slot in GOAL_RELEVANT_SLOTS
    ]


@pytest.fixture
def chat_config(tmp_path):
    config = RunConfig()
    config.domain.goal_corpus_size = 256
    config.output_dir = str(tmp_path)
    return config


# ---- permutation test ----

def test_perfect_separation_p_value():
    assert permutation_test([True] * 10, [False] * 10) == pytest.approx(1 / 184756)


def test_single_pair_p_value():
    assert permutation_test([True], [False]) == pytest.approx(0.5)
    assert permutation_test([False], [True]) == pytest.approx(1.0)


def test_identical_samples_are_not_significant():
    outcomes = [True, False, True, True, False, False]
    assert permutation_test(outcomes, outcomes) >= 0.5


def test_p_value_ignores_order_within_groups():
    a = [True, False, True, True, False]
    b = [False, False, True, False]
    assert permutation_test(a, b) == permutation_test(a[::-1], b[::-1])


@pytest.mark.parametrize("n_a,n_b,successes,observed", [(10, 10, 12, 8), (7, 5, 6, 3), (4, 9, 2, 0), (6, 6, 12, 6)])
def test_exact_p_value_matches_hypergeometric_tail(n_a, n_b, successes, observed):
    expected = hypergeom.sf(observed - 1, n_a + n_b, successes, n_a)
    assert exact_p_value(n_a, n_b, successes, observed) == pytest.approx(expected)


def test_monte_carlo_path(rng):
    p = permutation_test([True] * 10, [False] * 10, iterations=999, rng=rng, exact_limit=1)
    assert 1 / 1000 <= p <= 3 / 1000
    p_null = permutation_test([True, False] * 5, [True, False] * 5, iterations=999, rng=rng, exact_limit=1)
    assert p_null > 0.3


def test_permutation_test_rejects_bad_input():
    with pytest.raises(PermutationTestError):
        permutation_test([], [True])
    with pytest.raises(PermutationTestError):
        permutation_test([True], [False], iterations=0)


def test_load_outcomes_filters_by_agent(tmp_path):
    log = tmp_path / "eval.jsonl"
    lines = [
        {"agent": "a", "success": True},
        {"agent": "b", "success": False},
        {"agent": "a", "success": False},
    ]
    log.write_text("\n".join(json.dumps(x) for x in lines) + "\n\n", encoding="utf-8")
    assert load_outcomes(str(log), "a") == [True, False]
    assert load_outcomes(str(log)) == [True, False, False]

    log.write_text("{broken\n", encoding="utf-8")
    with pytest.raises(PermutationTestError):
        load_outcomes(str(log))


# ---- chat ----

def test_parse_user_act():
    assert parse_user_act("inform(city=seattle, date=tomorrow)") == DialogueAct(
        INTENT_INFORM, {"city": "seattle", "date": "tomorrow"}
    )
    assert parse_user_act("not_sure(date)") == DialogueAct(INTENT_NOT_SURE, {"date": UNKNOWN})
    assert parse_user_act("request(starttime=?)") == DialogueAct(INTENT_REQUEST, {"starttime": UNKNOWN})
    assert parse_user_act("  THANKS ").intent == "thanks"


@pytest.mark.parametrize("text", ["", "dance(city=x)", "inform(planet=mars)", "request(city=seattle)", "inform(city"])
def test_parse_user_act_rejects(text):
    with pytest.raises(ProtocolError):
        parse_user_act(text)


def test_human_user_reprompts_on_invalid_input(corpus):
    shown = []
    user = HumanUser(input_fn=scripted(["dance(city=x)", "help", "inform(city=seattle)"]), output_fn=shown.append)
    user.reset(corpus.goals[0])
    turn = user.step(DialogueAct(INTENT_REQUEST, {"city": UNKNOWN}))
    assert not turn.done
    assert turn.user_act == DialogueAct(INTENT_INFORM, {"city": "seattle"})
    assert user.invalid_inputs == 1
    assert user.state.turn == 1
    assert any("无效输入" in line for line in shown)


def test_human_user_eof_fails_dialogue(corpus):
    user = HumanUser(input_fn=scripted([]), output_fn=lambda _: None)
    user.reset(corpus.goals[0])
    turn = user.step(DialogueAct(INTENT_REQUEST, {"city": UNKNOWN}))
    assert turn.done
    assert turn.outcome.status == STATUS_FAILURE


def test_chat_abandon_is_logged_as_failure(chat_config, domain, tmp_path):
    log = tmp_path / "human.jsonl"
    outcome = chat_repl(
        None, seed=3, config=chat_config, input_fn=scripted(["abandon"]), output_fn=lambda _: None,
        log_path=str(log), policy=RuleAgent(domain.action_space), agent_name="rule",
    )
    assert outcome.status == STATUS_FAILURE
    assert outcome.turns == 1
    entry = json.loads(log.read_text(encoding="utf-8").strip())
    assert entry["agent"] == "rule"
    assert entry["success"] is False
    assert entry["turns"] == 1
    assert entry["seed"] == 3


def test_chat_with_oracle_user_succeeds(chat_config, domain):
    goal = domain.corpus.goals[10]
    shown = []
    outcome = chat_repl(
        None, seed=0, config=chat_config, input_fn=scripted(oracle_script(goal)), output_fn=shown.append,
        policy=RuleAgent(domain.action_space), goal=goal, agent_name="rule",
    )
    assert outcome.status == STATUS_SUCCESS
    assert outcome.turns == len(GOAL_RELEVANT_SLOTS) + 1
    assert outcome.reward == pytest.approx(80 - len(GOAL_RELEVANT_SLOTS))
    log_path = os.path.join(chat_config.output_dir, "human_eval.jsonl")
    entry = json.loads(open(log_path, encoding="utf-8").read().strip())
    assert entry["category_id"] == goal.category_id
    assert entry["success"] is True
    assert any("taskcomplete" in line for line in shown)


def test_chat_needs_a_policy(chat_config):
    with pytest.raises(ValueError):
        chat_repl(None, seed=0, config=chat_config, input_fn=scripted([]), output_fn=lambda _: None)


# ---- export ----

def synthetic_results():
    results = []
    for variant, base in (("DQN", 0.2), ("Switch-DDQ", 0.5)):
        for seed in (1, 2):
            metrics = [
                EpochMetrics(
                    variant=variant, seed=seed, epoch=epoch,
                    success_rate=base + 0.1 * epoch + 0.01 * seed, avg_reward=10.0 * epoch, avg_turns=20.0 - epoch,
                    agent_updates_total=40 * epoch, experiences_used_total=640 * epoch,
                )
                for epoch in (1, 2, 3)
            ]
            category = list(np.linspace(1.0, 0.0, NUM_CATEGORIES))
            results.append(RunResult(variant=variant, seed=seed, metrics=metrics, category_success=category))
    return results


def test_summarize_one_row_per_variant_epoch():
    summary = summarize(learning_curve(synthetic_results()))
    assert len(summary) == 2 * 3
    row = summary[(summary["variant"] == "DQN") & (summary["epoch"] == 2)].iloc[0]
    assert row["success_rate_mean"] == pytest.approx(0.2 + 0.2 + 0.015)
    assert row["success_rate_std"] == pytest.approx(np.std([0.41, 0.42], ddof=1))
    assert row["runs"] == 2


def test_category_table_ranks_ascending():
    table = category_table(synthetic_results()[:2])
    assert len(table) == NUM_CATEGORIES
    assert list(table["rank"]) == list(range(1, NUM_CATEGORIES + 1))
    assert table["success_rate"].is_monotonic_increasing
    assert table["category_id"].iloc[0] == NUM_CATEGORIES - 1


def test_export_writes_all_tables(tmp_path):
    written = export_metrics(synthetic_results(), str(tmp_path), table_epochs=[1, 3])
    names = {os.path.relpath(p, tmp_path) for p in written}
    assert names == {
        os.path.join(RUNS_DIR, "dqn_seed1.csv"),
        os.path.join(RUNS_DIR, "dqn_seed2.csv"),
        os.path.join(RUNS_DIR, "switch_ddq_seed1.csv"),
        os.path.join(RUNS_DIR, "switch_ddq_seed2.csv"),
        SUMMARY_FILE,
        TABLE_FILE,
        "category_success_dqn.csv",
        "category_success_switch_ddq.csv",
        UPDATES_FILE,
    }
    table = pd.read_csv(tmp_path / TABLE_FILE)
    assert sorted(set(table["epoch"])) == [1, 3]
    assert len(table) == 4


def test_export_is_byte_identical(tmp_path):
    first = export_metrics(synthetic_results(), str(tmp_path / "a"))
    second = export_metrics(synthetic_results(), str(tmp_path / "b"))
    for a, b in zip(first, second):
        with open(a, "rb") as fa, open(b, "rb") as fb:
            assert fa.read() == fb.read()


def test_export_of_nothing_writes_nothing(tmp_path):
    assert export_metrics([], str(tmp_path)) == []


# ---- command line ----

def test_main_rejects_bad_gamma(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert switch_ddq.main(["train", "--gamma", "1.5", "--output-dir", str(tmp_path / "out")]) == 1


def test_main_compare_prints_p_value(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    log_a = tmp_path / "a.jsonl"
    log_b = tmp_path / "b.jsonl"
    log_a.write_text("".join(json.dumps({"success": True}) + "\n" for _ in range(10)), encoding="utf-8")
    log_b.write_text("".join(json.dumps({"success": False}) + "\n" for _ in range(10)), encoding="utf-8")
    assert switch_ddq.main(["compare", str(log_a), str(log_b)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["p_value"] == pytest.approx(1 / 184756)
    assert report["difference"] == 1.0


def test_main_train_evaluate_export(small_config, tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    config_path = tmp_path / "small.json"
    config_path.write_text(json.dumps(small_config.to_dict()), encoding="utf-8")
    out = small_config.output_dir

    assert switch_ddq.main(["train", "--config", str(config_path), "--epochs", "1"]) == 0
    assert os.path.exists(os.path.join(out, SUMMARY_FILE))
    assert os.path.exists(os.path.join(tmp_path, "logs", "switch_ddq.log"))

    checkpoint = os.path.join(out, "checkpoints", "dqn_seed1", "q_epoch_0001.json")
    assert switch_ddq.main(["evaluate", "--config", str(config_path), "--checkpoint", checkpoint, "--dialogues", "2"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["dialogues"] == 2
    assert 0.0 <= report["success_rate"] <= 1.0
    assert os.path.exists(os.path.join(out, "effective_config.json"))
    with open(os.path.join(out, "effective_config_evaluate.json"), encoding="utf-8") as f:
        assert json.load(f)["output_dir"] == out

    monkeypatch.setattr("sys.stdin", io.StringIO("abandon\n"))
    assert switch_ddq.main([
        "chat", "--config", str(config_path), "--checkpoint", checkpoint, "--set", "agent.gamma=0.5",
    ]) == 0
    with open(os.path.join(out, "effective_config_chat.json"), encoding="utf-8") as f:
        assert json.load(f)["agent"]["gamma"] == 0.5
    with open(os.path.join(out, "human_eval.jsonl"), encoding="utf-8") as f:
        assert json.loads(f.readline())["success"] is False

    os.remove(os.path.join(out, SUMMARY_FILE))
    assert switch_ddq.main(["export", "--config", str(config_path)]) == 0
    assert os.path.exists(os.path.join(out, SUMMARY_FILE))


def test_main_export_without_results(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert switch_ddq.main(["export", "--output-dir", str(tmp_path / "empty")]) == 1
