#!/usr/bin/env python3
"""根据导出的指标表检查学习曲线趋势

读取 <output_dir>/runs/*.csv（逐运行曲线），检查：
  - Switch-DDQ 的最终成功率高于 DDQ(5) 与 DQN
  - DDQ(20) 末段成功率不高于 DDQ(5)
  - Switch-DDQ 首次达到 0.5 成功率的 epoch 不晚于 SU-DDQ
  - 每个 epoch 的真实对话数：DQN(K) 为 K，其余为 1
"""

import argparse
import glob
import json
import os
import sys
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional

import pandas as pd

RESULT_PASS = "pass"
RESULT_FAIL = "fail"
RESULT_SKIPPED = "skipped"

DEFAULT_MARGIN = 0.05
DEFAULT_WINDOW = 50
DEFAULT_TARGET = 0.5


@dataclass
class TrendCheck:
    name: str
    result: str
    detail: str


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="检查导出指标中的学习曲线趋势")
    parser.add_argument("output_dir", help="训练输出目录（包含 runs/ 子目录）")
    parser.add_argument("--margin", type=float, default=DEFAULT_MARGIN, help="Switch-DDQ 领先的最小成功率差")
    parser.add_argument("--window", type=int, default=DEFAULT_WINDOW, help="末段平均使用的 epoch 数")
    parser.add_argument("--target", type=float, default=DEFAULT_TARGET, help="首次达到的成功率目标")
    parser.add_argument("--json", action="store_true", help="以 JSON 输出结果")
    return parser.parse_args()


def load_curves(output_dir: str) -> pd.DataFrame:
    paths = sorted(glob.glob(os.path.join(output_dir, "runs", "*.csv")))
    if not paths:
        return pd.DataFrame()
    return pd.concat([pd.read_csv(p) for p in paths], ignore_index=True)


def _evaluated(curve: pd.DataFrame, variant: str) -> pd.DataFrame:
    rows = curve[curve["variant"] == variant]
    return rows[rows["success_rate"].notna()]


def final_success(curve: pd.DataFrame, variant: str) -> Optional[float]:
    """各种子最后一个测试 epoch 的成功率均值"""
    rows = _evaluated(curve, variant)
    if rows.empty:
        return None
    last = rows.loc[rows.groupby("seed")["epoch"].idxmax()]
    return float(last["success_rate"].mean())


def tail_success(curve: pd.DataFrame, variant: str, window: int) -> Optional[float]:
    rows = _evaluated(curve, variant)
    if rows.empty:
        return None
    cutoff = rows["epoch"].max() - window
    return float(rows[rows["epoch"] > cutoff]["success_rate"].mean())


def epochs_to_reach(curve: pd.DataFrame, variant: str, target: float) -> Optional[float]:
    """各种子首次达到 target 的 epoch 均值，从未达到按 max_epoch + 1 计"""
    rows = _evaluated(curve, variant)
    if rows.empty:
        return None
    horizon = int(rows["epoch"].max()) + 1
    firsts = []
    for _, seed_rows in rows.groupby("seed"):
        reached = seed_rows[seed_rows["success_rate"] >= target]["epoch"]
        firsts.append(int(reached.min()) if not reached.empty else horizon)
    return float(sum(firsts) / len(firsts))


def check_baselines(curve: pd.DataFrame, margin: float) -> List[TrendCheck]:
    switch = final_success(curve, "Switch-DDQ")
    checks = []
    for baseline in ("DDQ(5)", "DQN"):
        name = f"Switch-DDQ >= {baseline} + {margin}"
        other = final_success(curve, baseline)
        if switch is None or other is None:
            checks.append(TrendCheck(name, RESULT_SKIPPED, "缺少变体"))
            continue
        ok = switch - other >= margin
        checks.append(TrendCheck(name, RESULT_PASS if ok else RESULT_FAIL, f"{switch:.4f} vs {other:.4f}"))
    return checks


def check_aggressive_planning(curve: pd.DataFrame, window: int) -> TrendCheck:
    name = f"DDQ(20) <= DDQ(5) over last {window} epochs"
    heavy = tail_success(curve, "DDQ(20)", window)
    light = tail_success(curve, "DDQ(5)", window)
    if heavy is None or light is None:
        return TrendCheck(name, RESULT_SKIPPED, "缺少变体")
    return TrendCheck(name, RESULT_PASS if heavy <= light else RESULT_FAIL, f"{heavy:.4f} vs {light:.4f}")


def check_active_sampling(curve: pd.DataFrame, target: float) -> TrendCheck:
    name = f"Switch-DDQ reaches {target} no later than SU-DDQ"
    active = epochs_to_reach(curve, "Switch-DDQ", target)
    uniform = epochs_to_reach(curve, "SU-DDQ", target)
    if active is None or uniform is None:
        return TrendCheck(name, RESULT_SKIPPED, "缺少变体")
    return TrendCheck(name, RESULT_PASS if active <= uniform else RESULT_FAIL, f"{active:.1f} vs {uniform:.1f}")


def expected_real_dialogues(variant: str) -> int:
    if variant.startswith("DQN(") and variant.endswith(")"):
        return int(variant[4:-1])
    return 1


def check_real_dialogue_counts(curve: pd.DataFrame) -> TrendCheck:
    name = "real dialogues per epoch"
    if curve.empty:
        return TrendCheck(name, RESULT_SKIPPED, "没有曲线")
    bad: Dict[str, int] = {}
    for variant, rows in curve.groupby("variant"):
        wrong = int((rows["real_dialogues"] != expected_real_dialogues(variant)).sum())
        if wrong:
            bad[variant] = wrong
    if bad:
        return TrendCheck(name, RESULT_FAIL, f"不符合的行数: {bad}")
    return TrendCheck(name, RESULT_PASS, f"{len(curve)} 行全部符合")


def run_checks(curve: pd.DataFrame, margin: float, window: int, target: float) -> List[TrendCheck]:
    checks = check_baselines(curve, margin)
    checks.append(check_aggressive_planning(curve, window))
    checks.append(check_active_sampling(curve, target))
    checks.append(check_real_dialogue_counts(curve))
    return checks


def main() -> int:
    args = parse_args()
    curve = load_curves(args.output_dir)
    if curve.empty:
        print(f"错误: {args.output_dir}/runs 下没有曲线文件", file=sys.stderr)
        return 1

    checks = run_checks(curve, args.margin, args.window, args.target)
    if args.json:
        print(json.dumps([asdict(c) for c in checks], ensure_ascii=False, indent=2))
    else:
        for check in checks:
            print(f"[{check.result:>7}] {check.name}: {check.detail}")
    return 1 if any(c.result == RESULT_FAIL for c in checks) else 0


if __name__ == "__main__":
    sys.exit(main())
