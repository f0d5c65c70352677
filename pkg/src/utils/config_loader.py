import json
import logging
import os
import typing
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from typing import Any, Dict, List, Optional, Sequence

logger = logging.getLogger(__name__)

PROFILE_ENV = "SWITCH_DDQ_PROFILE"
OUTPUT_DIR_ENV = "SWITCH_DDQ_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "./runs"
EFFECTIVE_CONFIG_NAME = "effective_config.json"


class ConfigError(ValueError):
    """配置错误，消息以点分隔的键路径开头"""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


@dataclass
class DomainConfig:
    kb_seed: int = 7
    kb_rows: int = 100
    goal_seed: int = 11
    goal_corpus_size: int = 1024
    stratified_goals: bool = True
    max_turns: int = 40
    kb_path: Optional[str] = None
    goals_path: Optional[str] = None

    def validate(self):
        _require(self.kb_rows >= 1, "kb_rows", "kb_rows must be >= 1")
        _require(self.goal_corpus_size >= 128, "goal_corpus_size", "goal_corpus_size must be >= 128")
        _require(self.max_turns >= 2, "max_turns", "max_turns must be >= 2")


@dataclass
class AgentConfig:
    hidden_size: int = 80
    gamma: float = 0.9
    epsilon: float = 0.1
    learning_rate: float = 0.001
    max_grad_norm: float = 1.0
    batch_size: int = 16
    batches_per_epoch: int = 40
    real_buffer_size: int = 2000
    rbs_dialogues: int = 50

    def validate(self):
        _require(0.0 <= self.gamma <= 1.0, "gamma", "gamma must be in [0,1]")
        _require(0.0 <= self.epsilon <= 1.0, "epsilon", "epsilon must be in [0,1]")
        _require(self.learning_rate > 0.0, "learning_rate", "learning_rate must be > 0")
        _require(self.max_grad_norm > 0.0, "max_grad_norm", "max_grad_norm must be > 0")
        _require(self.hidden_size >= 1, "hidden_size", "hidden_size must be >= 1")
        _require(self.batch_size >= 1, "batch_size", "batch_size must be >= 1")
        _require(self.batches_per_epoch >= 0, "batches_per_epoch", "batches_per_epoch must be >= 0")
        _require(self.real_buffer_size >= 1, "real_buffer_size", "real_buffer_size must be >= 1")
        _require(self.rbs_dialogues >= 0, "rbs_dialogues", "rbs_dialogues must be >= 0")


@dataclass
class WorldModelConfig:
    encoder_size: int = 80
    hidden_size: int = 160
    learning_rate: float = 0.001
    max_grad_norm: float = 1.0
    batch_size: int = 16
    batches_per_epoch: int = 40
    pretrain_batches: int = 200

    def validate(self):
        _require(self.encoder_size >= 1, "encoder_size", "encoder_size must be >= 1")
        _require(self.hidden_size >= 1, "hidden_size", "hidden_size must be >= 1")
        _require(self.learning_rate > 0.0, "learning_rate", "learning_rate must be > 0")
        _require(self.max_grad_norm > 0.0, "max_grad_norm", "max_grad_norm must be > 0")
        _require(self.batch_size >= 1, "batch_size", "batch_size must be >= 1")
        _require(self.batches_per_epoch >= 0, "batches_per_epoch", "batches_per_epoch must be >= 0")
        _require(self.pretrain_batches >= 0, "pretrain_batches", "pretrain_batches must be >= 0")


@dataclass
class SwitcherConfig:
    encoder_size: int = 80
    hidden_size: int = 126
    learning_rate: float = 0.001
    max_grad_norm: float = 1.0
    batch_size: int = 16
    batches_per_epoch: int = 5
    threshold_low: float = 0.3
    threshold_high: float = 0.6
    anneal_epochs: int = 200
    reward_scale: Optional[float] = None

    def validate(self):
        _require(self.encoder_size >= 1, "encoder_size", "encoder_size must be >= 1")
        _require(self.hidden_size >= 1, "hidden_size", "hidden_size must be >= 1")
        _require(self.learning_rate > 0.0, "learning_rate", "learning_rate must be > 0")
        _require(self.max_grad_norm > 0.0, "max_grad_norm", "max_grad_norm must be > 0")
        _require(self.batch_size >= 1, "batch_size", "batch_size must be >= 1")
        _require(self.batches_per_epoch >= 0, "batches_per_epoch", "batches_per_epoch must be >= 0")
        _require(0.0 < self.threshold_low < 1.0, "threshold_low", "threshold_low must be in (0,1)")
        _require(
            self.threshold_low <= self.threshold_high < 1.0,
            "threshold_high",
            "threshold_high must be in [threshold_low, 1)",
        )
        _require(self.anneal_epochs >= 1, "anneal_epochs", "anneal_epochs must be >= 1")
        _require(self.reward_scale is None or self.reward_scale > 0.0, "reward_scale", "reward_scale must be > 0")


@dataclass
class SamplerConfig:
    prefill: int = 5

    def validate(self):
        _require(self.prefill >= 1, "prefill", "prefill must be >= 1")


@dataclass
class PipelineConfig:
    variants: List[str] = field(default_factory=lambda: ["DQN", "DQN(5)", "DDQ(5)", "Switch-DDQ"])
    seeds: List[int] = field(default_factory=lambda: [1, 2, 3])
    max_epoch: int = 300
    eval_interval: int = 1
    test_dialogues: int = 50
    validation_dialogues: int = 16
    max_planning_dialogues: int = 30
    sim_buffer_multiplier: int = 5
    checkpoint_epochs: List[int] = field(default_factory=lambda: [100, 200, 300])
    category_eval_dialogues: int = 5
    workers: int = 1

    def validate(self):
        from src.pipeline.variants import VariantError, parse_variant

        _require(len(self.variants) >= 1, "variants", "at least one variant is required")
        for variant in self.variants:
            try:
                parse_variant(variant)
            except VariantError as e:
                raise ConfigError("variants", str(e)) from e
        _require(len(self.seeds) >= 1, "seeds", "at least one seed is required")
        _require(self.max_epoch >= 1, "max_epoch", "max_epoch must be >= 1")
        _require(self.eval_interval >= 1, "eval_interval", "eval_interval must be >= 1")
        _require(self.test_dialogues >= 1, "test_dialogues", "test_dialogues must be >= 1")
        _require(self.validation_dialogues >= 1, "validation_dialogues", "validation_dialogues must be >= 1")
        _require(self.max_planning_dialogues >= 1, "max_planning_dialogues", "max_planning_dialogues must be >= 1")
        _require(self.sim_buffer_multiplier >= 1, "sim_buffer_multiplier", "sim_buffer_multiplier must be >= 1")
        _require(all(e >= 1 for e in self.checkpoint_epochs), "checkpoint_epochs", "checkpoint epochs must be >= 1")
        _require(self.category_eval_dialogues >= 0, "category_eval_dialogues", "category_eval_dialogues must be >= 0")
        _require(self.workers >= 1, "workers", "workers must be >= 1")


@dataclass
class RunConfig:
    domain: DomainConfig = field(default_factory=DomainConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    world_model: WorldModelConfig = field(default_factory=WorldModelConfig)
    switcher: SwitcherConfig = field(default_factory=SwitcherConfig)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    output_dir: str = field(default_factory=lambda: os.getenv(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR))

    def validate(self):
        for f in fields(self):
            section = getattr(self, f.name)
            if is_dataclass(section):
                try:
                    section.validate()
                except ConfigError as e:
                    raise ConfigError(f"{f.name}.{e.path}", e.message) from e
        if not self.output_dir:
            raise ConfigError("output_dir", "output_dir must not be empty")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _require(condition: bool, key: str, message: str):
    if not condition:
        raise ConfigError(key, message)


# 命令行具名参数到配置键的映射
FLAG_KEYS = {
    "gamma": "agent.gamma",
    "epsilon": "agent.epsilon",
    "lr": "agent.learning_rate",
    "epochs": "pipeline.max_epoch",
    "seeds": "pipeline.seeds",
    "variants": "pipeline.variants",
    "workers": "pipeline.workers",
    "eval_interval": "pipeline.eval_interval",
    "output_dir": "output_dir",
}


def _coerce(value: Any, annotation: Any, path: str) -> Any:
    origin = typing.get_origin(annotation)
    args = typing.get_args(annotation)
    if origin is typing.Union:
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(value, inner[0], path)
    if origin in (list, List):
        if not isinstance(value, list):
            raise ConfigError(path, f"expected a list, got {type(value).__name__}")
        return [_coerce(v, args[0], f"{path}[{i}]") for i, v in enumerate(value)]
    if annotation is bool:
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected bool, got {type(value).__name__}")
        return value
    if annotation is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected int, got {type(value).__name__}")
        return value
    if annotation is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected float, got {type(value).__name__}")
        return float(value)
    if annotation is str:
        if not isinstance(value, str):
            raise ConfigError(path, f"expected string, got {type(value).__name__}")
        return value
    raise ConfigError(path, f"unsupported field type {annotation}")


def _apply(target: Any, raw: Dict[str, Any], prefix: str = ""):
    """把字典按字段写入 dataclass 实例，未知键与类型不符都会报出键路径"""
    if not isinstance(raw, dict):
        raise ConfigError(prefix.rstrip("."), f"expected an object, got {type(raw).__name__}")
    hints = typing.get_type_hints(type(target))
    known = {f.name for f in fields(target)}
    for key, value in raw.items():
        path = f"{prefix}{key}"
        if key not in known:
            raise ConfigError(path, "unknown key")
        current = getattr(target, key)
        if is_dataclass(current):
            _apply(current, value, f"{path}.")
        else:
            setattr(target, key, _coerce(value, hints[key], path))


def _parse_scalar(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_overrides(assignments: Sequence[str]) -> Dict[str, Any]:
    """把 a.b=v 形式的覆盖项转成嵌套字典，值按 JSON 解析，失败时当作字符串"""
    nested: Dict[str, Any] = {}
    for item in assignments or []:
        if "=" not in item:
            raise ConfigError(item, "override must look like key.path=value")
        key, text = item.split("=", 1)
        parts = key.strip().split(".")
        node = nested
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = _parse_scalar(text.strip())
    return nested


def flags_to_overrides(flags: Dict[str, Any]) -> List[str]:
    assignments = []
    for name, key in FLAG_KEYS.items():
        value = flags.get(name)
        if value is None:
            continue
        assignments.append(f"{key}={json.dumps(value)}")
    return assignments


def _select_profile(full_config: Dict[str, Any]) -> Dict[str, Any]:
    if "default_profile" not in full_config and "current_profile" not in full_config:
        return full_config

    # 从配置文件中获取当前配置档，如果没有则从环境变量获取，最后使用默认配置档
    profile = full_config.get("current_profile") or os.getenv(PROFILE_ENV) or full_config.get("default_profile")
    if profile in full_config:
        logger.info(f"使用配置档 {profile}")
        return full_config[profile]
    default_profile = full_config.get("default_profile")
    if default_profile not in full_config:
        raise ConfigError("default_profile", f"profile {default_profile!r} not found in config file")
    logger.info(f"配置档 {profile} 不存在，使用默认配置档 {default_profile}")
    return full_config[default_profile]


def load_config(
    config_path: Optional[str] = None,
    overrides: Optional[Sequence[str]] = None,
    flags: Optional[Dict[str, Any]] = None,
) -> RunConfig:
    """默认值 <- 配置文件（选中的配置档）<- 具名参数 / --set 覆盖项"""
    config = RunConfig()
    if config_path:
        try:
            with open(config_path, "r", encoding="utf-8") as f:
                full_config = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError("", f"cannot read config file {config_path}: {e}") from e
        _apply(config, _select_profile(full_config))

    assignments = flags_to_overrides(flags or {}) + list(overrides or [])
    if assignments:
        _apply(config, parse_overrides(assignments))
    config.validate()
    return config


def config_from_dict(raw: Dict[str, Any]) -> RunConfig:
    config = RunConfig()
    _apply(config, raw)
    config.validate()
    return config


def effective_config_name(command: Optional[str] = None) -> str:
    """train 写 effective_config.json，其他子命令写 effective_config_<子命令>.json"""
    if not command or command == "train":
        return EFFECTIVE_CONFIG_NAME
    return f"effective_config_{command}.json"


def dump_config(config: RunConfig, directory: str, command: Optional[str] = None) -> str:
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, effective_config_name(command))
    with open(path, "w", encoding="utf-8") as f:
        json.dump(config.to_dict(), f, ensure_ascii=False, indent=2)
    logger.info(f"有效配置已写入 {path}")
    return path
