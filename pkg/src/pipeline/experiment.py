"""变体 × 种子的完整实验：逐个（或多进程）训练并汇总学习曲线"""

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Tuple

import pandas as pd

from src.core.factory import PipelineFactory
from src.pipeline.trainer import RunResult, Trainer
from src.pipeline.variants import parse_variant
from src.utils.config_loader import RunConfig, config_from_dict, dump_config

logger = logging.getLogger(__name__)

RESULTS_DIR = "results"
CHECKPOINTS_DIR = "checkpoints"


def run_file_name(variant_slug: str, seed: int) -> str:
    return f"{variant_slug}_seed{seed}.json"


def run_single(config: RunConfig, variant_text: str, seed: int, domain=None) -> RunResult:
    """训练一个 (变体, 种子) 组合并把结果写入 results/ 目录"""
    variant = parse_variant(variant_text)
    domain = domain or PipelineFactory.create_domain(config)
    checkpoint_dir = os.path.join(config.output_dir, CHECKPOINTS_DIR, f"{variant.slug}_seed{seed}")
    logger.info(f"开始训练 {variant.label} seed={seed}, 共 {config.pipeline.max_epoch} 个 epoch")
    result = Trainer(config, variant, seed, domain, checkpoint_dir=checkpoint_dir).run()
    save_run_result(result, os.path.join(config.output_dir, RESULTS_DIR, run_file_name(variant.slug, seed)))
    return result


def _run_in_worker(raw_config: Dict, variant_text: str, seed: int) -> Dict:
    result = run_single(config_from_dict(raw_config), variant_text, seed)
    return result.to_dict()


def save_run_result(result: RunResult, filepath: str) -> str:
    os.makedirs(os.path.dirname(filepath) or ".", exist_ok=True)
    with open(filepath, "w", encoding="utf-8") as f:
        json.dump(result.to_dict(), f, ensure_ascii=False, indent=2)
    return filepath


def load_run_results(output_dir: str) -> List[RunResult]:
    """读取 results/ 下的全部单次运行结果，按文件名排序"""
    results_dir = os.path.join(output_dir, RESULTS_DIR)
    if not os.path.isdir(results_dir):
        return []
    results = []
    for name in sorted(os.listdir(results_dir)):
        if not name.endswith(".json"):
            continue
        with open(os.path.join(results_dir, name), "r", encoding="utf-8") as f:
            results.append(RunResult.from_dict(json.load(f)))
    return results


def learning_curve(results: List[RunResult]) -> pd.DataFrame:
    """每个 (变体, 种子, epoch) 一行的学习曲线表"""
    rows = []
    for result in results:
        for metrics in result.metrics:
            row = metrics.to_dict()
            row.pop("category_failure_rates", None)
            row.pop("category_counts", None)
            rows.append(row)
    frame = pd.DataFrame(rows)
    if frame.empty:
        return frame
    return frame.sort_values(["variant", "seed", "epoch"], kind="mergesort").reset_index(drop=True)


def run_experiment(config: RunConfig) -> Tuple[List[RunResult], pd.DataFrame]:
    """各变体各种子训练 max_epoch 个 epoch，返回全部运行结果与学习曲线表"""
    dump_config(config, config.output_dir)
    jobs = [(variant, seed) for variant in config.pipeline.variants for seed in config.pipeline.seeds]
    for variant, _ in jobs:
        parse_variant(variant)

    results: List[RunResult] = []
    workers = config.pipeline.workers
    if workers > 1 and len(jobs) > 1:
        logger.info(f"使用 {workers} 个进程并行执行 {len(jobs)} 个运行")
        raw = config.to_dict()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_in_worker, raw, variant, seed) for variant, seed in jobs]
            results = [RunResult.from_dict(future.result()) for future in futures]
    else:
        domain = PipelineFactory.create_domain(config)
        for variant, seed in jobs:
            results.append(run_single(config, variant, seed, domain=domain))

    logger.info(f"实验完成: {len(results)} 个运行")
    return results, learning_curve(results)


def final_rows(results: List[RunResult], epochs: Optional[List[int]] = None) -> pd.DataFrame:
    """取每个运行在指定 epoch（默认最后一个）的测试指标"""
    curve = learning_curve(results)
    if curve.empty:
        return curve
    if epochs is None:
        last = curve.groupby(["variant", "seed"])["epoch"].transform("max")
        return curve[curve["epoch"] == last].reset_index(drop=True)
    return curve[curve["epoch"].isin(epochs)].reset_index(drop=True)
