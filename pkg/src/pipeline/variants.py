"""训练变体：DQN, DQN(K), DDQ(K), Switch-DDQ, SU-DDQ"""

import re
from dataclasses import dataclass
from typing import Optional

KIND_DQN = "DQN"
KIND_DQN_K = "DQN_K"
KIND_DDQ_K = "DDQ_K"
KIND_SWITCH_DDQ = "SwitchDDQ"
KIND_SU_DDQ = "SU_DDQ"

_K_PATTERN = re.compile(r"^(DQN|DDQ)\((\d+)\)$")


class VariantError(ValueError):
    pass


@dataclass(frozen=True)
class VariantConfig:
    kind: str
    k: Optional[int] = None

    def __post_init__(self):
        if self.kind in (KIND_DQN_K, KIND_DDQ_K):
            if self.k is None or self.k < 2:
                raise VariantError(f"{self.kind} needs K >= 2, got {self.k}")
        elif self.kind in (KIND_DQN, KIND_SWITCH_DDQ, KIND_SU_DDQ):
            if self.k is not None:
                raise VariantError(f"{self.kind} takes no K")
        else:
            raise VariantError(f"unknown variant kind: {self.kind!r}")

    @property
    def label(self) -> str:
        if self.kind == KIND_DQN_K:
            return f"DQN({self.k})"
        if self.kind == KIND_DDQ_K:
            return f"DDQ({self.k})"
        if self.kind == KIND_SWITCH_DDQ:
            return "Switch-DDQ"
        if self.kind == KIND_SU_DDQ:
            return "SU-DDQ"
        return "DQN"

    @property
    def slug(self) -> str:
        """文件名用的标签"""
        return re.sub(r"[^a-z0-9]+", "_", self.label.lower()).strip("_")

    @property
    def real_dialogues_per_epoch(self) -> int:
        return self.k if self.kind == KIND_DQN_K else 1

    @property
    def plans(self) -> bool:
        return self.kind in (KIND_DDQ_K, KIND_SWITCH_DDQ, KIND_SU_DDQ)

    @property
    def uses_switcher(self) -> bool:
        return self.kind in (KIND_SWITCH_DDQ, KIND_SU_DDQ)

    @property
    def active_sampling(self) -> bool:
        return self.kind == KIND_SWITCH_DDQ

    def real_buffer_capacity(self, base: int) -> int:
        return base * self.k if self.kind == KIND_DQN_K else base

    def sim_buffer_capacity(self, base: int, multiplier: int = 5) -> int:
        if self.kind == KIND_DDQ_K:
            return base * self.k
        if self.uses_switcher:
            return base * multiplier
        return base


def parse_variant(text: str) -> VariantConfig:
    name = text.strip()
    if name == "DQN":
        return VariantConfig(KIND_DQN)
    if name == "Switch-DDQ":
        return VariantConfig(KIND_SWITCH_DDQ)
    if name == "SU-DDQ":
        return VariantConfig(KIND_SU_DDQ)
    match = _K_PATTERN.match(name)
    if not match:
        raise VariantError(f"unknown variant: {text!r}")
    kind = KIND_DQN_K if match.group(1) == "DQN" else KIND_DDQ_K
    return VariantConfig(kind, int(match.group(2)))
