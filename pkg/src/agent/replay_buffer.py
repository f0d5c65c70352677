"""经验回放缓冲区 Bᵘ / Bˢ"""

import logging
from collections import deque
from typing import Dict, Iterator, List, Optional, Sequence

import numpy as np

from src.core.schemas import Experience
from src.dialogue.ontology import SOURCE_REAL, SOURCE_SIMULATED

logger = logging.getLogger(__name__)


class BufferSourceError(ValueError):
    """经验来源与缓冲区标签不一致"""


class ReplayBuffer:
    """定长 FIFO 缓冲区，同时保留每个对话的完整轮次，便于还原每轮的历史前缀

    被过滤掉或已被挤出的轮次仍留在对话历史中，直到该对话最后一条经验离开缓冲区。
    """

    def __init__(self, capacity: int, source: str = SOURCE_REAL):
        if capacity <= 0:
            raise ValueError(f"buffer capacity must be > 0, got {capacity}")
        if source not in (SOURCE_REAL, SOURCE_SIMULATED):
            raise BufferSourceError(f"unknown buffer source: {source!r}")
        self.capacity = capacity
        self.source = source
        self._items: deque = deque(maxlen=capacity)
        self._live: Dict[int, int] = {}
        self._histories: Dict[int, List[Experience]] = {}

    def __len__(self) -> int:
        return len(self._items)

    def __getitem__(self, index: int) -> Experience:
        return self._items[index]

    def __iter__(self) -> Iterator[Experience]:
        return iter(self._items)

    def push(self, exp: Experience, history: Optional[Sequence[Experience]] = None):
        """history 为 exp 所在对话的完整轮次；缺省时按写入顺序累积"""
        if exp.source != self.source:
            raise BufferSourceError(f"cannot store {exp.source} experience in {self.source} buffer")
        if history is not None and any(h.dialogue_id != exp.dialogue_id for h in history):
            raise ValueError(f"history mixes dialogues with dialogue {exp.dialogue_id}")
        evicted = self._items[0] if len(self._items) == self.capacity else None
        self._items.append(exp)
        self._live[exp.dialogue_id] = self._live.get(exp.dialogue_id, 0) + 1
        self._record_history(exp, history)
        if evicted is not None:
            self._live[evicted.dialogue_id] -= 1
            if self._live[evicted.dialogue_id] == 0:
                del self._live[evicted.dialogue_id]
                self._histories.pop(evicted.dialogue_id, None)

    def _record_history(self, exp: Experience, history: Optional[Sequence[Experience]]):
        turns = self._histories.setdefault(exp.dialogue_id, [])
        if history is not None:
            if len(history) > len(turns):
                turns[:] = sorted(history, key=lambda h: h.position)
            return
        if not turns or turns[-1].position < exp.position:
            turns.append(exp)

    def extend(self, experiences: Sequence[Experience], history: Optional[Sequence[Experience]] = None) -> int:
        for exp in experiences:
            self.push(exp, history)
        return len(experiences)

    def clear(self):
        self._items.clear()
        self._live.clear()
        self._histories.clear()

    def dialogue(self, dialogue_id: int) -> List[Experience]:
        """对话的完整轮次（包括未写入或已挤出的轮次）"""
        return list(self._histories.get(dialogue_id, []))

    def prefix(self, exp: Experience) -> List[Experience]:
        """exp 所在对话从第 0 轮到 exp 的完整历史"""
        turns = self._histories.get(exp.dialogue_id)
        if not turns:
            return [exp]
        return [e for e in turns if e.position <= exp.position]

    def dialogue_ids(self) -> List[int]:
        """缓冲区内仍有经验的对话编号"""
        return list(self._live)


def sample_union(buffers: Sequence[ReplayBuffer], batch_size: int, rng: np.random.Generator) -> List[Experience]:
    """从多个缓冲区的并集中有放回地均匀抽样，每条经验等概率"""
    sizes = [len(buf) for buf in buffers]
    total = sum(sizes)
    if total == 0:
        return []
    picks = rng.integers(total, size=batch_size)
    offsets = np.cumsum([0] + sizes)
    batch = []
    for pick in picks:
        which = int(np.searchsorted(offsets, pick, side="right") - 1)
        batch.append(buffers[which][int(pick - offsets[which])])
    return batch
