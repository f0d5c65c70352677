"""命令行子命令的处理函数，每个返回进程退出码"""

import argparse
import json
import logging
from typing import Any, Dict

import numpy as np

from src.agent.dqn import DQNAgent, evaluate_policy
from src.cli.chat import chat_repl
from src.cli.export import export_metrics
from src.cli.permutation import load_outcomes, mean_difference, permutation_test
from src.core.factory import PipelineFactory
from src.pipeline.experiment import load_run_results, run_experiment
from src.pipeline.trainer import fixed_test_goals
from src.utils.config_loader import FLAG_KEYS, RunConfig, dump_config, load_config

logger = logging.getLogger(__name__)


def parse_config(args: argparse.Namespace) -> RunConfig:
    """默认值 <- --config 文件 <- 具名参数 <- --set"""
    flags: Dict[str, Any] = {name: getattr(args, name, None) for name in FLAG_KEYS}
    return load_config(getattr(args, "config", None), overrides=getattr(args, "set", None), flags=flags)


def cmd_train(args: argparse.Namespace) -> int:
    config = parse_config(args)
    results, curve = run_experiment(config)
    written = export_metrics(results, config.output_dir, table_epochs=config.pipeline.checkpoint_epochs)
    logger.info(f"训练完成: {len(results)} 个运行, {len(curve)} 行学习曲线, {len(written)} 个导出文件")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = parse_config(args)
    dump_config(config, config.output_dir, command="evaluate")
    domain = PipelineFactory.create_domain(config)
    agent = DQNAgent.load(args.checkpoint)
    n = args.dialogues or config.pipeline.test_dialogues
    goals = fixed_test_goals(domain, args.seed, n)
    result = evaluate_policy(
        agent, domain.new_user(), goals, domain.action_space, domain.user_acts,
        np.random.default_rng(args.seed), max_turns=domain.max_turns,
    )
    print(json.dumps({
        "checkpoint": args.checkpoint,
        "dialogues": n,
        "success_rate": result.success_rate,
        "avg_reward": result.avg_reward,
        "avg_turns": result.avg_turns,
    }, ensure_ascii=False, indent=2))
    return 0


def cmd_chat(args: argparse.Namespace) -> int:
    config = parse_config(args)
    dump_config(config, config.output_dir, command="chat")
    chat_repl(args.checkpoint, args.seed, config=config, log_path=args.log, agent_name=args.agent_name)
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    a = load_outcomes(args.log_a, args.agent_a)
    b = load_outcomes(args.log_b or args.log_a, args.agent_b)
    p = permutation_test(a, b, iterations=args.iterations, rng=np.random.default_rng(args.seed))
    print(json.dumps({
        "n_a": len(a),
        "n_b": len(b),
        "success_a": float(np.mean(a)),
        "success_b": float(np.mean(b)),
        "difference": mean_difference(a, b),
        "p_value": p,
    }, ensure_ascii=False, indent=2))
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    config = parse_config(args)
    results = load_run_results(config.output_dir)
    if not results:
        logger.error(f"{config.output_dir} 下没有运行结果")
        return 1
    export_metrics(results, config.output_dir, table_epochs=config.pipeline.checkpoint_epochs)
    return 0
