import argparse
import logging
import os
import sys

from src.agent.replay_buffer import BufferSourceError
from src.cli.commands import cmd_chat, cmd_compare, cmd_evaluate, cmd_export, cmd_train
from src.cli.export import ExportError
from src.cli.permutation import PermutationTestError
from src.nn.errors import CheckpointError
from src.pipeline.trainer import EpochError
from src.pipeline.variants import VariantError
from src.utils.config_loader import ConfigError, OUTPUT_DIR_ENV


def configure_logging(verbose: bool = False) -> logging.Logger:
    log_file = './logs/switch_ddq.log'
    log_dir = os.path.dirname(log_file)
    formatter = logging.Formatter('%(asctime)s - %(levelname)s - %(message)s')

    try:
        os.makedirs(log_dir, exist_ok=True)
        file_handler = logging.FileHandler(log_file, encoding='utf-8')
        file_handler.setFormatter(formatter)
    except OSError:
        file_handler = None

    console_handler = logging.StreamHandler()
    console_handler.setFormatter(formatter)

    root = logging.getLogger()
    root.setLevel(logging.DEBUG if verbose else logging.INFO)
    root.handlers.clear()
    if file_handler:
        root.addHandler(file_handler)
    root.addHandler(console_handler)
    return logging.getLogger(__name__)


def _add_config_args(parser: argparse.ArgumentParser):
    parser.add_argument('--config', type=str, default=None, help='JSON 配置文件路径')
    parser.add_argument('--set', action='append', default=None, metavar='KEY=VALUE',
                        help='覆盖任意配置项，例如 --set agent.batch_size=32 (可重复)')
    parser.add_argument('--output-dir', dest='output_dir', type=str, default=None,
                        help=f'输出目录 (默认: 环境变量 {OUTPUT_DIR_ENV} 或 ./runs)')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Switch-DDQ 任务型对话策略训练')
    parser.add_argument('--verbose', action='store_true', help='输出 DEBUG 级别日志')
    sub = parser.add_subparsers(dest='command', required=True)

    train = sub.add_parser('train', help='按配置训练全部变体 × 种子并导出指标')
    _add_config_args(train)
    train.add_argument('--gamma', type=float, default=None, help='折扣因子 (默认: 0.9)')
    train.add_argument('--epsilon', type=float, default=None, help='ε-greedy 探索率 (默认: 0.1)')
    train.add_argument('--lr', type=float, default=None, help='agent 学习率 (默认: 0.001)')
    train.add_argument('--epochs', type=int, default=None, help='每个运行的 epoch 数 (默认: 300)')
    train.add_argument('--seeds', type=int, nargs='+', default=None, help='随机种子列表 (默认: 1 2 3)')
    train.add_argument('--variants', type=str, nargs='+', default=None,
                       help='变体列表，如 DQN "DQN(5)" "DDQ(5)" Switch-DDQ SU-DDQ')
    train.add_argument('--workers', type=int, default=None, help='并行进程数 (默认: 1)')
    train.add_argument('--eval-interval', dest='eval_interval', type=int, default=None,
                       help='每隔多少个 epoch 做一次 50 对话测试 (默认: 1)')
    train.set_defaults(handler=cmd_train)

    evaluate = sub.add_parser('evaluate', help='用规则用户贪心测试一个策略检查点')
    _add_config_args(evaluate)
    evaluate.add_argument('--checkpoint', type=str, required=True, help='Q 网络检查点 JSON')
    evaluate.add_argument('--seed', type=int, default=1, help='测试目标的随机种子 (默认: 1)')
    evaluate.add_argument('--dialogues', type=int, default=None, help='测试对话数 (默认: 配置中的 test_dialogues)')
    evaluate.set_defaults(handler=cmd_evaluate)

    chat = sub.add_parser('chat', help='人工评测：在终端扮演用户与策略对话')
    _add_config_args(chat)
    chat.add_argument('--checkpoint', type=str, required=True, help='Q 网络检查点 JSON')
    chat.add_argument('--seed', type=int, default=0, help='抽取用户目标的随机种子 (默认: 0)')
    chat.add_argument('--log', type=str, default=None, help='人工评测日志 (默认: <输出目录>/human_eval.jsonl)')
    chat.add_argument('--agent-name', dest='agent_name', type=str, default=None, help='写入日志的 agent 名称')
    chat.set_defaults(handler=cmd_chat)

    compare = sub.add_parser('compare', help='对两组人工评测结果做单侧置换检验')
    compare.add_argument('log_a', type=str, help='agent A 的人工评测日志')
    compare.add_argument('log_b', type=str, nargs='?', default=None, help='agent B 的日志 (省略时与 A 同一文件)')
    compare.add_argument('--agent-a', dest='agent_a', type=str, default=None, help='按 agent 名过滤 A')
    compare.add_argument('--agent-b', dest='agent_b', type=str, default=None, help='按 agent 名过滤 B')
    compare.add_argument('--iterations', type=int, default=10000, help='蒙特卡洛置换次数 (默认: 10000)')
    compare.add_argument('--seed', type=int, default=0, help='置换随机种子 (默认: 0)')
    compare.set_defaults(handler=cmd_compare)

    export = sub.add_parser('export', help='从 results/ 重新导出 CSV 指标表')
    _add_config_args(export)
    export.set_defaults(handler=cmd_export)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logger = configure_logging(args.verbose)
    try:
        return args.handler(args)
    except (ConfigError, VariantError) as e:
        logger.error("配置错误: %s", e)
    except (CheckpointError, PermutationTestError, BufferSourceError) as e:
        logger.error("%s", e)
    except ExportError as e:
        logger.error("导出失败: %s", e)
    except EpochError as e:
        logger.error("训练失败: %s", e)
    except KeyboardInterrupt:
        logger.info("已中断")
    return 1


if __name__ == '__main__':
    sys.exit(main())
