"""两样本置换检验（单侧）：H1 为 a 的成功率高于 b"""

import json
import logging
from math import comb
from typing import List, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_ITERATIONS = 10000
EXACT_LIMIT = 2_000_000
_TOLERANCE = 1e-12


class PermutationTestError(ValueError):
    pass


def _as_outcomes(values: Sequence[bool], name: str) -> np.ndarray:
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        raise PermutationTestError(f"{name} must be non-empty")
    return arr


def mean_difference(successes_a: Sequence[bool], successes_b: Sequence[bool]) -> float:
    return float(np.mean(successes_a) - np.mean(successes_b))


def exact_p_value(n_a: int, n_b: int, total_successes: int, observed_in_a: int) -> float:
    """枚举全部 C(n, n_a) 种分组：统计量只取决于分到 a 的成功数 k，且随 k 单调递增"""
    n = n_a + n_b
    failures = n - total_successes
    hits = sum(
        comb(total_successes, k) * comb(failures, n_a - k)
        for k in range(observed_in_a, min(n_a, total_successes) + 1)
    )
    return hits / comb(n, n_a)


def monte_carlo_p_value(
    a: np.ndarray, b: np.ndarray, iterations: int, rng: np.random.Generator
) -> float:
    pooled = np.concatenate([a, b])
    n_a = a.size
    observed = a.mean() - b.mean()
    count = 0
    for _ in range(iterations):
        perm = rng.permutation(pooled)
        if perm[:n_a].mean() - perm[n_a:].mean() >= observed - _TOLERANCE:
            count += 1
    return (count + 1) / (iterations + 1)


def permutation_test(
    successes_a: Sequence[bool],
    successes_b: Sequence[bool],
    iterations: int = DEFAULT_ITERATIONS,
    rng: Optional[np.random.Generator] = None,
    exact_limit: int = EXACT_LIMIT,
) -> float:
    """统计量 mean(a) - mean(b)；分组数不超过 exact_limit 时精确枚举，否则做加一平滑的蒙特卡洛"""
    a = _as_outcomes(successes_a, "successes_a")
    b = _as_outcomes(successes_b, "successes_b")
    if iterations < 1:
        raise PermutationTestError(f"iterations must be >= 1, got {iterations}")

    if comb(a.size + b.size, a.size) <= exact_limit:
        p = exact_p_value(a.size, b.size, int(a.sum() + b.sum()), int(a.sum()))
        method = "exact"
    else:
        p = monte_carlo_p_value(a, b, iterations, rng if rng is not None else np.random.default_rng(0))
        method = "monte_carlo"
    logger.info(f"置换检验({method}): n_a={a.size}, n_b={b.size}, 差值={mean_difference(a, b):.4f}, p={p:.6g}")
    return p


def load_outcomes(log_path: str, agent: Optional[str] = None) -> List[bool]:
    """从人工评测 JSONL 日志读取成功标记，可按 agent 名过滤"""
    outcomes = []
    with open(log_path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                entry = json.loads(line)
            except json.JSONDecodeError as e:
                raise PermutationTestError(f"{log_path}:{line_no}: invalid JSON line: {e}") from e
            if agent is not None and entry.get("agent") != agent:
                continue
            outcomes.append(bool(entry["success"]))
    return outcomes
