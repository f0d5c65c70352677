"""网络参数的 JSON 检查点

浮点数按 Python repr 写出，读回后逐位一致。
"""

import json
import logging
import os
from typing import Any, Dict, Optional

import numpy as np

from src.nn.base import ParameterizedModel
from src.nn.errors import CheckpointError

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "switch-ddq-params"
CHECKPOINT_VERSION = 1


def params_to_payload(params: Dict[str, np.ndarray], metadata: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    entries = []
    for name, arr in params.items():
        entries.append({
            "name": name,
            "shape": list(arr.shape),
            "dtype": str(arr.dtype),
            "values": [float(v) for v in np.asarray(arr).reshape(-1)],
        })
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "metadata": metadata or {},
        "params": entries,
    }


def payload_to_params(payload: Dict[str, Any]) -> Dict[str, np.ndarray]:
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"unknown checkpoint format: {payload.get('format')!r}")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version: {payload.get('version')!r}")
    params: Dict[str, np.ndarray] = {}
    for entry in payload.get("params", []):
        try:
            shape = tuple(int(d) for d in entry["shape"])
            arr = np.array(entry["values"], dtype=entry.get("dtype", "float64")).reshape(shape)
        except (KeyError, ValueError, TypeError) as e:
            raise CheckpointError(f"malformed parameter entry {entry.get('name')!r}: {e}") from e
        params[entry["name"]] = arr
    return params


def save_parameters(filepath: str, params: Dict[str, np.ndarray], metadata: Optional[Dict[str, Any]] = None) -> str:
    os.makedirs(os.path.dirname(filepath) or ".", exist_ok=True)
    with open(filepath, "w", encoding="utf-8") as f:
        json.dump(params_to_payload(params, metadata), f, ensure_ascii=False)
    logger.info(f"参数检查点已保存: {filepath} ({len(params)} 个参数数组)")
    return filepath


def load_parameters(filepath: str) -> Dict[str, np.ndarray]:
    try:
        with open(filepath, "r", encoding="utf-8") as f:
            payload = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise CheckpointError(f"cannot read checkpoint {filepath}: {e}") from e
    return payload_to_params(payload)


def read_metadata(filepath: str) -> Dict[str, Any]:
    with open(filepath, "r", encoding="utf-8") as f:
        return json.load(f).get("metadata", {})


def save_model(model: ParameterizedModel, filepath: str, metadata: Optional[Dict[str, Any]] = None) -> str:
    return save_parameters(filepath, model.parameters(), metadata)


def load_model(model: ParameterizedModel, filepath: str) -> ParameterizedModel:
    """把检查点写入已构建好的同结构模型"""
    try:
        model.load_parameters(load_parameters(filepath))
    except ValueError as e:
        if isinstance(e, CheckpointError):
            raise
        raise CheckpointError(f"checkpoint {filepath} does not fit model: {e}") from e
    return model
