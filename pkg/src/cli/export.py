"""把运行结果导出为 CSV 指标表"""

import logging
import os
from typing import List, Sequence

import numpy as np
import pandas as pd

from src.dialogue.ontology import NUM_CATEGORIES
from src.pipeline.experiment import learning_curve
from src.pipeline.trainer import RunResult
from src.pipeline.variants import parse_variant

logger = logging.getLogger(__name__)

RUNS_DIR = "runs"
SUMMARY_FILE = "summary.csv"
TABLE_FILE = "table1.csv"
UPDATES_FILE = "curves_by_updates.csv"
TABLE_EPOCHS = (100, 200, 300)

SUMMARY_METRICS = ("success_rate", "avg_reward", "avg_turns")
SUMMARY_COUNTERS = (
    "real_experiences_total",
    "simulated_experiences_total",
    "agent_updates_total",
    "experiences_used_total",
)
UPDATE_COLUMNS = (
    "variant", "seed", "epoch", "agent_updates_total", "experiences_used_total",
    "success_rate", "avg_reward", "avg_turns",
)


class ExportError(OSError):
    pass


def summarize(curve: pd.DataFrame) -> pd.DataFrame:
    """每个 (变体, epoch) 一行：测试指标的跨种子均值与标准差，计数器取均值"""
    curve = curve.copy()
    curve[list(SUMMARY_METRICS)] = curve[list(SUMMARY_METRICS)].astype(float)
    grouped = curve.groupby(["variant", "epoch"], sort=True)
    parts = []
    for metric in SUMMARY_METRICS:
        stats = grouped[metric].agg(["mean", "std"])
        stats.columns = [f"{metric}_mean", f"{metric}_std"]
        parts.append(stats)
    parts.append(grouped[list(SUMMARY_COUNTERS)].mean())
    parts.append(grouped["seed"].count().rename("runs"))
    return pd.concat(parts, axis=1).reset_index()


def checkpoint_table(summary: pd.DataFrame, epochs: Sequence[int] = TABLE_EPOCHS) -> pd.DataFrame:
    """各变体在检查点 epoch 上的 (成功率, 奖励, 轮数)"""
    rows = summary[summary["epoch"].isin(list(epochs))]
    columns = ["variant", "epoch"] + [f"{m}_mean" for m in SUMMARY_METRICS] + [f"{m}_std" for m in SUMMARY_METRICS]
    return rows[columns].reset_index(drop=True)


def category_table(results: List[RunResult]) -> pd.DataFrame:
    """跨种子平均的各类别成功率，按成功率升序排列（并列时按类别编号）"""
    rates = np.array([r.category_success for r in results if len(r.category_success) == NUM_CATEGORIES])
    frame = pd.DataFrame({
        "category_id": np.arange(NUM_CATEGORIES),
        "success_rate": rates.mean(axis=0) if rates.size else np.zeros(NUM_CATEGORIES),
    })
    frame = frame.sort_values(["success_rate", "category_id"], kind="mergesort").reset_index(drop=True)
    frame.insert(0, "rank", np.arange(1, NUM_CATEGORIES + 1))
    return frame


def _write(frame: pd.DataFrame, filepath: str) -> str:
    frame.to_csv(filepath, index=False)
    return filepath


def export_metrics(
    results: List[RunResult], output_dir: str, table_epochs: Sequence[int] = TABLE_EPOCHS
) -> List[str]:
    """写出逐运行曲线、汇总表、检查点表、各类别排序表与按更新次数的曲线，返回文件路径"""
    try:
        os.makedirs(os.path.join(output_dir, RUNS_DIR), exist_ok=True)
    except OSError as e:
        raise ExportError(f"cannot create output directory {output_dir}: {e}") from e

    curve = learning_curve(results)
    if curve.empty:
        logger.warning("没有可导出的指标行")
        return []

    written = []
    try:
        for (variant, seed), rows in curve.groupby(["variant", "seed"], sort=True):
            name = f"{parse_variant(variant).slug}_seed{seed}.csv"
            written.append(_write(rows, os.path.join(output_dir, RUNS_DIR, name)))

        summary = summarize(curve)
        written.append(_write(summary, os.path.join(output_dir, SUMMARY_FILE)))
        written.append(_write(checkpoint_table(summary, table_epochs), os.path.join(output_dir, TABLE_FILE)))

        by_variant = {}
        for result in results:
            by_variant.setdefault(result.variant, []).append(result)
        for variant in sorted(by_variant):
            name = f"category_success_{parse_variant(variant).slug}.csv"
            written.append(_write(category_table(by_variant[variant]), os.path.join(output_dir, name)))

        updates = curve[list(UPDATE_COLUMNS)].sort_values(
            ["variant", "seed", "agent_updates_total"], kind="mergesort"
        )
        written.append(_write(updates, os.path.join(output_dir, UPDATES_FILE)))
    except OSError as e:
        raise ExportError(f"cannot write metrics under {output_dir}: {e}") from e

    logger.info(f"已导出 {len(written)} 个指标文件到 {output_dir}")
    return written
